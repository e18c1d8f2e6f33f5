//! Logic-level checks: truth tables from DC operating points, comparison
//! against Boolean formulas, and the fan-out pressure budget.

mod expr;
mod fanout;

pub use expr::Expr;
pub use fanout::{fanout_limit, FanoutLimit, FanoutReport, FanoutSample, SourceSpec, DEFAULT_FANOUT_CAP};

use std::fmt;

use serde::Serialize;

use crate::engine::{dc_operating_point, EngineError};
use crate::netdom::{DomainError, PhysicalDefaults, Pressure};
use crate::netlist::{expand_with, Circuit, ExpandError};

/// Inputs beyond this make the 2^n row sweep unreasonable.
pub const MAX_TABLE_INPUTS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error(transparent)]
    Netlist(#[from] ExpandError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("row {inputs}: {source}")]
    Row { inputs: String, source: EngineError },
    #[error(
        "IndeterminateLevel: row {inputs}: output `{output}` reads {pressure_kpa:.3} kPa, between {low} and {high} kPa"
    )]
    IndeterminateLevel {
        inputs: String,
        output: String,
        pressure_kpa: f64,
        low: f64,
        high: f64,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("UnknownVariable: `{0}` is not a table input")]
    UnknownVariable(String),
    #[error("formula error at character {position}: {message}")]
    Expression { position: usize, message: String },
    #[error("invalid logic levels: {0}")]
    InvalidLevels(String),
    #[error("{0} inputs exceed the limit of {MAX_TABLE_INPUTS}")]
    TooManyInputs(usize),
}

/// Drive and read thresholds, kPa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicLevels {
    pub drive_high: f64,
    pub drive_low: f64,
    pub read_high_min: f64,
    pub read_low_max: f64,
}

impl Default for LogicLevels {
    fn default() -> Self {
        LogicLevels::from_defaults(&PhysicalDefaults::default(), 145.0)
    }
}

impl LogicLevels {
    /// Reads tied to the valve thresholds, drives at `supply_kpa` and 0.
    pub fn from_defaults(d: &PhysicalDefaults, supply_kpa: f64) -> Self {
        LogicLevels {
            drive_high: supply_kpa,
            drive_low: 0.0,
            read_high_min: d.p_inflate_kpa,
            read_low_max: d.p_deflate_kpa,
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let ok = self.drive_low < self.read_low_max
            && self.read_low_max < self.read_high_min
            && self.read_high_min <= self.drive_high;
        if ok {
            Ok(())
        } else {
            Err(VerifyError::InvalidLevels(format!(
                "need drive_low < read_low_max < read_high_min <= drive_high, got {} / {} / {} / {}",
                self.drive_low, self.read_low_max, self.read_high_min, self.drive_high
            )))
        }
    }

    pub fn classify(&self, kpa: f64) -> Option<bool> {
        if kpa >= self.read_high_min {
            Some(true)
        } else if kpa <= self.read_low_max {
            Some(false)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub outputs: Vec<bool>,
    /// Backing DC pressures of the outputs, kPa.
    pub pressures_kpa: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTable {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// 2^n rows, ascending binary with the first input as the most
    /// significant bit.
    pub rows: Vec<TruthRow>,
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn row_label(names: &[String], values: &[bool]) -> String {
    names
        .iter()
        .zip(values)
        .map(|(n, &b)| format!("{n}={}", b as u8))
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let header: Vec<&str> = self
            .inputs
            .iter()
            .chain(&self.outputs)
            .map(String::as_str)
            .collect();
        write!(f, "{}", header.join(" "))?;
        for o in &self.outputs {
            write!(f, " {o}_kPa")?;
        }
        writeln!(f)?;
        for r in &self.rows {
            let cells: Vec<String> = r
                .inputs
                .iter()
                .chain(&r.outputs)
                .map(|&b| (b as u8).to_string())
                .collect();
            write!(f, "{}", cells.join(" "))?;
            for p in &r.pressures_kpa {
                write!(f, " {p:.3}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn truth_table(
    circuit: &Circuit,
    inputs: &[&str],
    outputs: &[&str],
    levels: &LogicLevels,
) -> Result<TruthTable, VerifyError> {
    truth_table_with(circuit, &PhysicalDefaults::default(), inputs, outputs, levels)
}

/// Pins each input node at the drive level, solves the DC operating point
/// and classifies every output.
pub fn truth_table_with(
    circuit: &Circuit,
    defaults: &PhysicalDefaults,
    inputs: &[&str],
    outputs: &[&str],
    levels: &LogicLevels,
) -> Result<TruthTable, VerifyError> {
    levels.validate()?;
    if inputs.len() > MAX_TABLE_INPUTS {
        return Err(VerifyError::TooManyInputs(inputs.len()));
    }
    let net = expand_with(circuit, defaults)?;
    // an undriven input floats at 0 kPa, so a circuit with no fixed point
    // here cannot settle with its inputs held low either
    if let Err(EngineError::AstableCircuit) = dc_operating_point(&net) {
        return Err(VerifyError::Row {
            inputs: "inputs floating".into(),
            source: EngineError::AstableCircuit,
        });
    }
    let lookup = |name: &str| net.node_id(name).ok_or_else(|| VerifyError::UnknownNode(name.to_string()));
    let in_ids = inputs.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?;
    let out_ids = outputs.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?;
    let input_names: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
    let n = inputs.len();

    let mut rows = Vec::with_capacity(1 << n);
    for k in 0..1usize << n {
        let vector: Vec<bool> = (0..n).map(|i| k >> (n - 1 - i) & 1 == 1).collect();
        let mut pinned = net.clone();
        for (&id, &b) in in_ids.iter().zip(&vector) {
            let p = if b { levels.drive_high } else { levels.drive_low };
            pinned.fix_node(id, Pressure::from_kpa(p))?;
        }
        let label = row_label(&input_names, &vector);
        let ss = dc_operating_point(&pinned).map_err(|source| VerifyError::Row {
            inputs: label.clone(),
            source,
        })?;
        let mut outs = Vec::with_capacity(out_ids.len());
        let mut pressures = Vec::with_capacity(out_ids.len());
        for (&id, name) in out_ids.iter().zip(outputs) {
            let p = ss.pressure(id).kpa();
            let bit = levels
                .classify(p)
                .ok_or_else(|| VerifyError::IndeterminateLevel {
                    inputs: label.clone(),
                    output: name.to_string(),
                    pressure_kpa: p,
                    low: levels.read_low_max,
                    high: levels.read_high_min,
                })?;
            outs.push(bit);
            pressures.push(p);
        }
        rows.push(TruthRow {
            inputs: vector,
            outputs: outs,
            pressures_kpa: pressures,
        });
    }
    Ok(TruthTable {
        inputs: input_names,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub inputs: Vec<bool>,
    pub expected: bool,
    pub actual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub expression: String,
    pub output: String,
    pub rows_checked: usize,
    pub mismatches: Vec<Mismatch>,
}

impl MatchReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return writeln!(
                f,
                "PASS: {} = {} on all {} rows",
                self.output, self.expression, self.rows_checked
            );
        }
        writeln!(
            f,
            "FAIL: {} != {} on {} of {} rows",
            self.output,
            self.expression,
            self.mismatches.len(),
            self.rows_checked
        )?;
        for m in &self.mismatches {
            writeln!(
                f,
                "  inputs {}: expected {}, got {}",
                bits(&m.inputs),
                m.expected as u8,
                m.actual as u8
            )?;
        }
        Ok(())
    }
}

/// Compares the first output of `table` with `expression`, evaluated by
/// brute force over every input vector.
pub fn check_against_boolean(table: &TruthTable, expression: &str) -> Result<MatchReport, VerifyError> {
    let output = table
        .outputs
        .first()
        .ok_or_else(|| VerifyError::UnknownNode("<no outputs>".into()))?;
    check_output(table, output, expression)
}

pub fn check_output(table: &TruthTable, output: &str, expression: &str) -> Result<MatchReport, VerifyError> {
    let expr = Expr::parse(expression)?;
    if let Some(v) = expr.variables().into_iter().find(|v| !table.inputs.contains(v)) {
        return Err(VerifyError::UnknownVariable(v));
    }
    let col = table
        .outputs
        .iter()
        .position(|o| o == output)
        .ok_or_else(|| VerifyError::UnknownNode(output.to_string()))?;
    let n = table.inputs.len();
    let mut mismatches = Vec::new();
    for k in 0..1usize << n {
        let vector: Vec<bool> = (0..n).map(|i| k >> (n - 1 - i) & 1 == 1).collect();
        let expected = expr.eval(&|name| {
            table
                .inputs
                .iter()
                .position(|i| i == name)
                .map(|i| vector[i])
        })?;
        // a table missing a row counts as a mismatch against `!expected`
        let actual = table
            .rows
            .iter()
            .find(|r| r.inputs == vector)
            .map_or(!expected, |r| r.outputs[col]);
        if actual != expected {
            mismatches.push(Mismatch {
                inputs: vector,
                expected,
                actual,
            });
        }
    }
    Ok(MatchReport {
        expression: expression.to_string(),
        output: output.to_string(),
        rows_checked: 1 << n,
        mismatches,
    })
}
