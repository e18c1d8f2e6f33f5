//! Line-oriented circuit description language.
//!
//! ```text
//! source SUP pressure=145kPa
//! atm ATM
//! gate NOT g1 in=a out=q supply=SUP
//! probe q
//! ```
//!
//! Each statement is `kind ident key=value…`. Quantities take a unit suffix
//! (kPa, mL, cm, mm, m, s) and are stored in the canonical unit of their key.

mod ast;
mod bom;
mod expand;
mod format;
mod parse;

pub use ast::{key_type, keys_of, Circuit, GateKind, KeyType, Kind, Statement, Unit, Value};
pub use bom::{bom, device_count, BillOfMaterials, BomLine, UNIT_COST_CENTS};
pub use expand::{expand, expand_with};
pub use format::format;
pub use parse::parse;

use crate::netdom::DomainError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: SyntaxError: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: DuplicateId: `{id}` is already declared on line {first_line}")]
    DuplicateId {
        line: usize,
        col: usize,
        id: String,
        first_line: usize,
    },
    #[error("{line}:{col}: UnknownUnit: `{unit}` ({detail})")]
    UnknownUnit {
        line: usize,
        col: usize,
        unit: String,
        detail: String,
    },
    #[error("{line}:{col}: UnknownKeyword: `{word}` (expected {expected})")]
    UnknownKeyword {
        line: usize,
        col: usize,
        word: String,
        expected: String,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateId { line, .. }
            | ParseError::UnknownUnit { line, .. }
            | ParseError::UnknownKeyword { line, .. } => *line,
        }
    }

    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { col, .. }
            | ParseError::DuplicateId { col, .. }
            | ParseError::UnknownUnit { col, .. }
            | ParseError::UnknownKeyword { col, .. } => *col,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpandError {
    #[error("{line}:1: EvenRing: ring `{id}` has n = {n}; a ring needs an odd number of gates")]
    EvenRing { line: usize, id: String, n: u64 },
    #[error("{line}:1: ring `{id}` has n = {n}; at least 3 gates are needed")]
    RingTooShort { line: usize, id: String, n: u64 },
    #[error("{line}:1: UnboundPort: `{id}` has no `{port}`")]
    UnboundPort {
        line: usize,
        id: String,
        port: String,
    },
    #[error("{line}:1: SupplyMissing: `{id}` needs supply=<source>{}", .supply.as_ref().map(|s| format!(", and `{s}` is not a declared source")).unwrap_or_default())]
    SupplyMissing {
        line: usize,
        id: String,
        supply: Option<String>,
    },
    #[error("{line}:1: `{id}` expects {expected} entries in `{key}`, found {found}")]
    Arity {
        line: usize,
        id: String,
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:1: second atm statement `{id}`; a circuit has one atmosphere")]
    MultipleAtmospheres { line: usize, id: String },
    #[error("{line}:1: `{id}`: {source}")]
    Domain {
        line: usize,
        id: String,
        source: DomainError,
    },
}

impl ExpandError {
    pub fn line(&self) -> usize {
        match self {
            ExpandError::EvenRing { line, .. }
            | ExpandError::RingTooShort { line, .. }
            | ExpandError::UnboundPort { line, .. }
            | ExpandError::SupplyMissing { line, .. }
            | ExpandError::Arity { line, .. }
            | ExpandError::MultipleAtmospheres { line, .. }
            | ExpandError::Domain { line, .. } => *line,
        }
    }
}

/// Parse or expansion failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
}

impl NetlistError {
    pub fn line(&self) -> usize {
        match self {
            NetlistError::Parse(e) => e.line(),
            NetlistError::Expand(e) => e.line(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OverrideError {
    #[error("no statement named `{0}`")]
    UnknownId(String),
    #[error("`{id}` has no parameter `{key}`")]
    UnknownKey { id: String, key: String },
    #[error("bad value for `{id}.{key}`: {source}")]
    Value {
        id: String,
        key: String,
        source: ParseError,
    },
}

impl Circuit {
    /// Sets `key` on the statement named `id`, parsing `value` exactly as
    /// the netlist reader would.
    pub fn set(&mut self, id: &str, key: &str, value: &str) -> Result<(), OverrideError> {
        let stmt = self
            .find_mut(id)
            .ok_or_else(|| OverrideError::UnknownId(id.to_string()))?;
        let ty = key_type(stmt.kind, key).ok_or_else(|| OverrideError::UnknownKey {
            id: id.to_string(),
            key: key.to_string(),
        })?;
        let v = parse::parse_value(stmt.kind, key, ty, value, stmt.line, 1).map_err(|source| {
            OverrideError::Value {
                id: id.to_string(),
                key: key.to_string(),
                source,
            }
        })?;
        stmt.params.insert(key.to_string(), v);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_units() {
        let mut c = parse("ring r n=3 supply=S taps=a,b,c").unwrap();
        c.set("r", "pulldown_len", "0.2m").unwrap();
        assert_eq!(c.statements[0].number("pulldown_len"), Some(20.0));
        assert!(matches!(c.set("x", "n", "3"), Err(OverrideError::UnknownId(_))));
        assert!(matches!(c.set("r", "colour", "3"), Err(OverrideError::UnknownKey { .. })));
        assert!(matches!(
            c.set("r", "pulldown_len", "3psi"),
            Err(OverrideError::Value {
                source: ParseError::UnknownUnit { .. },
                ..
            })
        ));
    }
}
