use std::fmt::Write as _;

use super::ast::{key_type, Circuit, KeyType, Kind, Value};

fn write_value(out: &mut String, ty: Option<KeyType>, v: &Value) {
    match v {
        Value::Number(x) => {
            let _ = write!(out, "{x}");
            if let Some(KeyType::Quantity(u)) = ty {
                out.push_str(u.symbol());
            }
        }
        Value::Name(s) => out.push_str(s),
        Value::List(items) => out.push_str(&items.join(",")),
    }
}

/// Canonical text: one statement per line, keys sorted, every quantity in
/// its key's canonical unit, LF line endings.
pub fn format(circuit: &Circuit) -> String {
    let mut out = String::new();
    for s in &circuit.statements {
        out.push_str(s.kind.keyword());
        if let Kind::Gate(g) = s.kind {
            out.push(' ');
            out.push_str(g.keyword());
        }
        out.push(' ');
        out.push_str(&s.id);
        for (k, v) in &s.params {
            let _ = write!(out, " {k}=");
            write_value(&mut out, key_type(s.kind, k), v);
        }
        out.push('\n');
    }
    out
}
