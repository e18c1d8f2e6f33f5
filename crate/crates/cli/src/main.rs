use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use tubelogic::engine::{extract_frequency, simulate, EngineError, SimConfig, Trace};
use tubelogic::netdom::PhysicalDefaults;
use tubelogic::netlist::{bom, expand_with, parse, Circuit, Kind, Statement};
use tubelogic::verify::{check_against_boolean, truth_table_with, LogicLevels, TruthTable, VerifyError};
use tubelogic::PneumaticNetwork;

mod svg;

const USAGE: u8 = 1;
const STATIC: u8 = 2;
const ANALYSIS: u8 = 3;
const MISMATCH: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "tbl", version, about = "Simulate and verify tube-balloon pneumatic logic")]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Override a parameter, e.g. `--set osc.pulldown_len=20cm`. Repeatable.
    #[arg(long = "set", global = true, value_name = "ID.KEY=VALUE")]
    overrides: Vec<String>,
    /// Accepted for scripting; the engine is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    JsonLines,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a transient simulation and write the probe trace as CSV.
    Sim {
        file: PathBuf,
        /// Simulated time, s.
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        /// Extra nodes to record.
        #[arg(long)]
        probe: Vec<String>,
        /// Write the trace here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Also render the trace as an SVG polyline plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Tabulate DC logic levels over every input combination.
    Truth {
        file: PathBuf,
        /// Nodes driven high or low for each row.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<String>,
        /// Nodes read back at DC.
        #[arg(long, value_delimiter = ',', required = true)]
        outputs: Vec<String>,
        /// Boolean formula the first output must follow, e.g. "!(A|B)".
        #[arg(long)]
        expect: Option<String>,
    },
    /// Measure oscillation frequency, levels and phase offsets.
    Freq {
        file: PathBuf,
        /// Node to measure; defaults to the first probe statement.
        #[arg(long)]
        probe: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
    },
    /// Print the bill of materials.
    Bom { file: PathBuf },
    /// Parse, expand and validate without simulating.
    Check { file: PathBuf },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code,
            error: error.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::new(USAGE, anyhow!("{msg}"))
}

fn defaults() -> Result<PhysicalDefaults, Failure> {
    let Some(path) = std::env::var_os("TBL_DEFAULTS") else {
        return Ok(PhysicalDefaults::default());
    };
    let path = PathBuf::from(path);
    let read = || -> anyhow::Result<PhysicalDefaults> {
        let text = fs::read_to_string(&path)?;
        let d: PhysicalDefaults = serde_json::from_str(&text)?;
        d.validate()?;
        Ok(d)
    };
    read()
        .with_context(|| format!("TBL_DEFAULTS={}", path.display()))
        .map_err(|e| Failure::new(USAGE, e))
}

/// Reads and parses `path`, then applies `--set` overrides.
fn load(path: &Path, overrides: &[String]) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| Failure::new(USAGE, e))?;
    let mut circuit =
        parse(&text).map_err(|e| Failure::new(STATIC, anyhow!("{}:{e}", path.display())))?;
    for o in overrides {
        let (target, value) = o
            .split_once('=')
            .ok_or_else(|| usage(format!("--set {o}: expected ID.KEY=VALUE")))?;
        let (id, key) = target
            .rsplit_once('.')
            .ok_or_else(|| usage(format!("--set {o}: expected ID.KEY=VALUE")))?;
        circuit
            .set(id, key, value)
            .map_err(|e| usage(format!("--set {o}: {e}")))?;
    }
    Ok(circuit)
}

fn build(path: &Path, circuit: &Circuit, d: &PhysicalDefaults) -> Result<PneumaticNetwork, Failure> {
    expand_with(circuit, d).map_err(|e| Failure::new(STATIC, anyhow!("{}:{e}", path.display())))
}

fn add_probes(circuit: &mut Circuit, names: &[String]) {
    for n in names {
        if !circuit.probes().any(|p| p == n) {
            circuit.statements.push(Statement::new(Kind::Probe, n.clone()));
        }
    }
}

fn sim_config(t_end: f64) -> Result<SimConfig, Failure> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(usage(format!("--t-end must be a positive number of seconds, got {t_end}")));
    }
    Ok(SimConfig::default().with_t_end(t_end))
}

fn engine_failure(e: EngineError) -> Failure {
    Failure::new(ANALYSIS, e)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(|e| Failure::new(USAGE, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn trace_json_lines(trace: &Trace) -> String {
    let mut out = String::new();
    for s in &trace.samples {
        let mut row = serde_json::Map::new();
        row.insert("time_s".into(), json!(s.time));
        for (name, p) in trace.probe_names.iter().zip(&s.pressures) {
            row.insert(format!("{name}_kPa"), json!(p));
        }
        out.push_str(&serde_json::Value::Object(row).to_string());
        out.push('\n');
    }
    out
}

fn warn_bursts(net: &PneumaticNetwork, trace: &Trace) {
    for &(t, node) in &trace.burst_warnings {
        eprintln!(
            "warning: balloon at `{}` exceeds its burst pressure at t = {t:.4} s",
            net.node_name(node)
        );
    }
}

fn cmd_sim(
    cli: &Cli,
    file: &Path,
    t_end: f64,
    probes: &[String],
    out: &Option<PathBuf>,
    svg_path: &Option<PathBuf>,
) -> Outcome {
    let cfg = sim_config(t_end)?;
    let d = defaults()?;
    let mut circuit = load(file, &cli.overrides)?;
    add_probes(&mut circuit, probes);
    if circuit.probes().next().is_none() {
        return Err(usage("nothing to record: add probe statements or --probe"));
    }
    let net = build(file, &circuit, &d)?;
    let trace = simulate(&net, &cfg).map_err(engine_failure)?;
    warn_bursts(&net, &trace);
    let text = match cli.format {
        Format::JsonLines => trace_json_lines(&trace),
        Format::Text | Format::Csv => trace.to_csv(),
    };
    emit(out, &text)?;
    if let Some(p) = svg_path {
        fs::write(p, svg::render(&trace))
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(|e| Failure::new(USAGE, e))?;
    }
    Ok(0)
}

fn verify_failure(file: &Path, e: VerifyError) -> Failure {
    match e {
        VerifyError::Netlist(e) => Failure::new(STATIC, anyhow!("{}:{e}", file.display())),
        VerifyError::Engine(_)
        | VerifyError::Domain(_)
        | VerifyError::Row { .. }
        | VerifyError::IndeterminateLevel { .. } => Failure::new(ANALYSIS, e),
        VerifyError::UnknownNode(_)
        | VerifyError::UnknownVariable(_)
        | VerifyError::Expression { .. }
        | VerifyError::InvalidLevels(_)
        | VerifyError::TooManyInputs(_) => Failure::new(USAGE, e),
    }
}

/// Highest declared source pressure, the natural logic-high drive.
fn supply_kpa(circuit: &Circuit) -> f64 {
    circuit
        .statements
        .iter()
        .filter(|s| s.kind == Kind::Source)
        .filter_map(|s| s.number("pressure"))
        .fold(None, |m: Option<f64>, p| Some(m.map_or(p, |m| m.max(p))))
        .unwrap_or(145.0)
}

fn table_csv(t: &TruthTable) -> String {
    let mut header: Vec<String> = t.inputs.iter().chain(&t.outputs).cloned().collect();
    header.extend(t.outputs.iter().map(|o| format!("{o}_kPa")));
    let mut out = header.join(",") + "\n";
    for r in &t.rows {
        let mut cells: Vec<String> = r
            .inputs
            .iter()
            .chain(&r.outputs)
            .map(|&b| (b as u8).to_string())
            .collect();
        cells.extend(r.pressures_kpa.iter().map(|p| p.to_string()));
        out += &(cells.join(",") + "\n");
    }
    out
}

fn table_json_lines(t: &TruthTable) -> String {
    let mut out = String::new();
    for r in &t.rows {
        let mut row = serde_json::Map::new();
        for (n, &b) in t.inputs.iter().zip(&r.inputs) {
            row.insert(n.clone(), json!(b as u8));
        }
        for ((n, &b), p) in t.outputs.iter().zip(&r.outputs).zip(&r.pressures_kpa) {
            row.insert(n.clone(), json!(b as u8));
            row.insert(format!("{n}_kPa"), json!(p));
        }
        out += &serde_json::Value::Object(row).to_string();
        out.push('\n');
    }
    out
}

fn cmd_truth(cli: &Cli, file: &Path, inputs: &[String], outputs: &[String], expect: Option<&str>) -> Outcome {
    let d = defaults()?;
    let circuit = load(file, &cli.overrides)?;
    let levels = LogicLevels::from_defaults(&d, supply_kpa(&circuit));
    let ins: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let outs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    let table = truth_table_with(&circuit, &d, &ins, &outs, &levels).map_err(|e| verify_failure(file, e))?;
    let text = match cli.format {
        Format::Text => table.to_string(),
        Format::Csv => table_csv(&table),
        Format::JsonLines => table_json_lines(&table),
    };
    print!("{text}");
    let Some(formula) = expect else {
        return Ok(0);
    };
    let report = check_against_boolean(&table, formula).map_err(|e| verify_failure(file, e))?;
    match cli.format {
        Format::JsonLines => println!("{}", serde_json::to_string(&report).expect("serializable report")),
        Format::Text | Format::Csv => print!("{report}"),
    }
    Ok(if report.passed() { 0 } else { MISMATCH })
}

fn cmd_freq(cli: &Cli, file: &Path, probe: Option<&str>, t_end: f64) -> Outcome {
    let cfg = sim_config(t_end)?;
    let d = defaults()?;
    let mut circuit = load(file, &cli.overrides)?;
    let target = match probe {
        Some(p) => p.to_string(),
        None => circuit
            .probes()
            .next()
            .map(str::to_string)
            .ok_or_else(|| usage("no node to measure: pass --probe or add a probe statement"))?,
    };
    add_probes(&mut circuit, std::slice::from_ref(&target));
    let net = build(file, &circuit, &d)?;
    let node = net
        .node_id(&target)
        .ok_or_else(|| usage(format!("unknown node `{target}`")))?;
    let trace = simulate(&net, &cfg).map_err(engine_failure)?;
    warn_bursts(&net, &trace);
    let r = extract_frequency(&trace, node).map_err(engine_failure)?;
    let text = match cli.format {
        Format::JsonLines => serde_json::to_string(&r).expect("serializable report") + "\n",
        Format::Csv => {
            let mut s = String::from("node,frequency_hz,peak_kPa,trough_kPa,phase_deg\n");
            for p in &r.probes {
                let phase = p.phase_deg.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{phase}", p.node, r.frequency_hz, p.peak_kpa, p.trough_kpa);
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "probe      {}", r.probe);
            let _ = writeln!(s, "frequency  {:.3} Hz (period {:.4} s, {} cycles)", r.frequency_hz, r.period_s, r.cycles);
            let _ = writeln!(s, "peak       {:.2} kPa", r.peak_kpa);
            let _ = writeln!(s, "trough     {:.2} kPa", r.trough_kpa);
            let _ = writeln!(s, "duty       {:.3}", r.duty);
            for p in &r.probes {
                let phase = p.phase_deg.map_or("-".to_string(), |x| format!("{x:.1} deg"));
                let _ = writeln!(s, "  {:<16} peak {:>7.2} kPa  trough {:>7.2} kPa  lag {phase}", p.node, p.peak_kpa, p.trough_kpa);
            }
            s
        }
    };
    print!("{text}");
    Ok(0)
}

fn cmd_bom(cli: &Cli, file: &Path) -> Outcome {
    let circuit = load(file, &cli.overrides)?;
    let b = bom(&circuit);
    match cli.format {
        Format::Text => print!("{b}"),
        Format::JsonLines => println!("{}", serde_json::to_string(&b).expect("serializable bom")),
        Format::Csv => {
            println!("description,supplier,quantity,unit,cost_usd");
            for l in &b.lines {
                println!(
                    "{},{},{},{},{:.2}",
                    l.description,
                    l.supplier,
                    l.quantity,
                    l.unit,
                    l.cost_cents as f64 / 100.0
                );
            }
            println!("total,,{},device,{:.2}", b.device_count, b.total_usd());
        }
    }
    Ok(0)
}

fn cmd_check(cli: &Cli, file: &Path) -> Outcome {
    let d = defaults()?;
    let circuit = load(file, &cli.overrides)?;
    let net = build(file, &circuit, &d)?;
    println!(
        "{}: ok ({} statements, {} nodes, {} valves, {} tubes)",
        file.display(),
        circuit.statements.len(),
        net.node_count(),
        net.valves.len(),
        net.tubes.len()
    );
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Sim {
            file,
            t_end,
            probe,
            out,
            svg,
        } => cmd_sim(cli, file, *t_end, probe, out, svg),
        Command::Truth {
            file,
            inputs,
            outputs,
            expect,
        } => cmd_truth(cli, file, inputs, outputs, expect.as_deref()),
        Command::Freq { file, probe, t_end } => cmd_freq(cli, file, probe.as_deref(), *t_end),
        Command::Bom { file } => cmd_bom(cli, file),
        Command::Check { file } => cmd_check(cli, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            // library errors often quote their cause already
            let mut msg = String::new();
            for cause in f.error.chain() {
                let text = cause.to_string();
                if !msg.contains(&text) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&text);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(f.code)
        }
    }
}
