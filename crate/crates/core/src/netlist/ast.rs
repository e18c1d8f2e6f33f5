use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Not,
    Nor,
    Nand,
    And,
    Or,
}

impl GateKind {
    pub const ALL: [GateKind; 5] = [
        GateKind::Not,
        GateKind::Nor,
        GateKind::Nand,
        GateKind::And,
        GateKind::Or,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::Not => "NOT",
            GateKind::Nor => "NOR",
            GateKind::Nand => "NAND",
            GateKind::And => "AND",
            GateKind::Or => "OR",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        GateKind::ALL.into_iter().find(|g| g.keyword() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Not => 1,
            _ => 2,
        }
    }

    /// Kink-valve devices used by one instance.
    pub fn device_count(self) -> usize {
        match self {
            GateKind::Not => 1,
            GateKind::Nor | GateKind::Nand => 2,
            GateKind::And | GateKind::Or => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Source,
    Atm,
    Tube,
    Balloon,
    Valve,
    Gate(GateKind),
    Ring,
    Probe,
}

impl Kind {
    pub fn keyword(self) -> &'static str {
        match self {
            Kind::Source => "source",
            Kind::Atm => "atm",
            Kind::Tube => "tube",
            Kind::Balloon => "balloon",
            Kind::Valve => "valve",
            Kind::Gate(_) => "gate",
            Kind::Ring => "ring",
            Kind::Probe => "probe",
        }
    }

    pub(crate) fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "source" => Kind::Source,
            "atm" => Kind::Atm,
            "tube" => Kind::Tube,
            "balloon" => Kind::Balloon,
            "valve" => Kind::Valve,
            "gate" => Kind::Gate(GateKind::Not),
            "ring" => Kind::Ring,
            "probe" => Kind::Probe,
            _ => return None,
        })
    }

    /// Identifier namespace: all gate types share one.
    pub(crate) fn namespace(self) -> &'static str {
        self.keyword()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// In the canonical unit of its key (see [`KeyType`]).
    Number(f64),
    Name(String),
    List(Vec<String>),
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_name(&self) -> Option<&str> {
        match self {
            Value::Name(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[String]> {
        match self {
            Value::List(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Statement {
    pub kind: Kind,
    pub id: String,
    pub params: BTreeMap<String, Value>,
    /// Source line, 0 for statements built in code. Not part of equality.
    pub line: usize,
}

impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.id == other.id && self.params == other.params
    }
}

impl Statement {
    pub fn new(kind: Kind, id: impl Into<String>) -> Self {
        Statement {
            kind,
            id: id.into(),
            params: BTreeMap::new(),
            line: 0,
        }
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.params.get(key).and_then(Value::as_number)
    }

    pub fn name(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Value::as_name)
    }

    pub fn list(&self, key: &str) -> Option<&[String]> {
        self.params.get(key).and_then(Value::as_list)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub statements: Vec<Statement>,
}

impl Circuit {
    pub fn find(&self, id: &str) -> Option<&Statement> {
        self.statements
            .iter()
            .find(|s| s.kind != Kind::Probe && s.id == id)
    }

    pub fn find_mut(&mut self, id: &str) -> Option<&mut Statement> {
        self.statements
            .iter_mut()
            .find(|s| s.kind != Kind::Probe && s.id == id)
    }

    pub fn probes(&self) -> impl Iterator<Item = &str> {
        self.statements
            .iter()
            .filter(|s| s.kind == Kind::Probe)
            .map(|s| s.id.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    KPa,
    ML,
    Cm,
    Mm,
    M,
    S,
}

impl Unit {
    pub const ALL: [Unit; 6] = [Unit::KPa, Unit::ML, Unit::Cm, Unit::Mm, Unit::M, Unit::S];

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::KPa => "kPa",
            Unit::ML => "mL",
            Unit::Cm => "cm",
            Unit::Mm => "mm",
            Unit::M => "m",
            Unit::S => "s",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Unit::ALL.into_iter().find(|u| u.symbol() == s)
    }

    fn metres(self) -> Option<f64> {
        match self {
            Unit::Cm => Some(1e-2),
            Unit::Mm => Some(1e-3),
            Unit::M => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// What a key accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyType {
    /// Number carrying a unit; stored and printed in `canonical`.
    Quantity(Unit),
    /// Number without a unit.
    Bare,
    /// Non-negative integer.
    Count,
    Name,
    List,
    Choice(&'static [&'static str]),
}

impl KeyType {
    /// Factor converting a value in `unit` to this key's canonical unit.
    pub fn factor(self, unit: Unit) -> Option<f64> {
        let KeyType::Quantity(canon) = self else {
            return None;
        };
        if unit == canon {
            return Some(1.0);
        }
        match (unit.metres(), canon.metres()) {
            (Some(a), Some(b)) => Some(a / b),
            _ => None,
        }
    }
}

const VALVE_INIT: &[&str] = &["open", "closed"];
const TOPOLOGY: &[&str] = &["per-gate", "central"];

const DEVICE_KEYS: &[(&str, KeyType)] = &[
    ("burst", KeyType::Quantity(Unit::KPa)),
    ("compliance", KeyType::Bare),
    ("control_len", KeyType::Quantity(Unit::Cm)),
    ("deflate", KeyType::Quantity(Unit::KPa)),
    ("device_len", KeyType::Quantity(Unit::Cm)),
    ("gleak", KeyType::Bare),
    ("gopen", KeyType::Bare),
    ("id", KeyType::Quantity(Unit::Mm)),
    ("inflate", KeyType::Quantity(Unit::KPa)),
    ("pulldown_len", KeyType::Quantity(Unit::Cm)),
    ("rest", KeyType::Quantity(Unit::ML)),
    ("sense", KeyType::Quantity(Unit::Cm)),
];

const VALVE_KEYS: &[(&str, KeyType)] = &[
    ("burst", KeyType::Quantity(Unit::KPa)),
    ("compliance", KeyType::Bare),
    ("ctrl", KeyType::Name),
    ("deflate", KeyType::Quantity(Unit::KPa)),
    ("from", KeyType::Name),
    ("gleak", KeyType::Bare),
    ("gopen", KeyType::Bare),
    ("inflate", KeyType::Quantity(Unit::KPa)),
    ("init", KeyType::Choice(VALVE_INIT)),
    ("rest", KeyType::Quantity(Unit::ML)),
    ("to", KeyType::Name),
];

/// Keys accepted by each statement kind.
///
/// Units: pressures kPa, volumes mL, lengths cm (inner diameters mm).
/// Bare numbers: `compliance` mL/kPa, `gopen`/`gleak` mL/(s·kPa),
/// `r`/`rint` kPa·s/mL.
pub fn key_type(kind: Kind, key: &str) -> Option<KeyType> {
    let lookup = |table: &[(&str, KeyType)]| {
        table
            .iter()
            .find(|(k, _)| *k == key)
            .map(|&(_, t)| t)
    };
    match kind {
        Kind::Source => match key {
            "pressure" => Some(KeyType::Quantity(Unit::KPa)),
            "rint" => Some(KeyType::Bare),
            _ => None,
        },
        Kind::Atm | Kind::Probe => None,
        Kind::Tube => match key {
            "from" | "to" => Some(KeyType::Name),
            "length" => Some(KeyType::Quantity(Unit::Cm)),
            "id" => Some(KeyType::Quantity(Unit::Mm)),
            "r" => Some(KeyType::Bare),
            _ => None,
        },
        Kind::Balloon => match key {
            "node" => Some(KeyType::Name),
            "rest" | "volume" => Some(KeyType::Quantity(Unit::ML)),
            "compliance" => Some(KeyType::Bare),
            "burst" => Some(KeyType::Quantity(Unit::KPa)),
            _ => None,
        },
        Kind::Valve => lookup(VALVE_KEYS),
        Kind::Gate(_) => match key {
            "in" => Some(KeyType::List),
            "out" | "supply" => Some(KeyType::Name),
            "init" => Some(KeyType::Choice(VALVE_INIT)),
            _ => lookup(DEVICE_KEYS),
        },
        Kind::Ring => match key {
            "n" => Some(KeyType::Count),
            "supply" => Some(KeyType::Name),
            "taps" => Some(KeyType::List),
            "pulldown" => Some(KeyType::Choice(TOPOLOGY)),
            "drain_len" => Some(KeyType::Quantity(Unit::Cm)),
            _ => lookup(DEVICE_KEYS),
        },
    }
}

/// All keys of `kind`, sorted.
pub fn keys_of(kind: Kind) -> Vec<&'static str> {
    const CANDIDATES: &[&str] = &[
        "burst", "compliance", "control_len", "ctrl", "deflate", "device_len", "drain_len",
        "from", "gleak", "gopen", "id", "in", "inflate", "init", "length", "n", "node", "out",
        "pressure", "pulldown", "pulldown_len", "r", "rest", "rint", "sense", "supply", "taps",
        "to", "volume",
    ];
    CANDIDATES
        .iter()
        .copied()
        .filter(|k| key_type(kind, k).is_some())
        .collect()
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}
