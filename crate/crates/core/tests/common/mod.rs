//! AST generators shared by the netlist and acceptance tests.

use proptest::prelude::*;
use tubelogic::netlist::{key_type, keys_of, Circuit, GateKind, KeyType, Kind, Statement, Value};

const KINDS: [Kind; 12] = [
    Kind::Source,
    Kind::Atm,
    Kind::Tube,
    Kind::Balloon,
    Kind::Valve,
    Kind::Gate(GateKind::Not),
    Kind::Gate(GateKind::Nor),
    Kind::Gate(GateKind::Nand),
    Kind::Gate(GateKind::And),
    Kind::Gate(GateKind::Or),
    Kind::Ring,
    Kind::Probe,
];

fn ident() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_.-]{0,8}"
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        (0i64..1000).prop_map(|n| n as f64),
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

fn value(ty: KeyType) -> BoxedStrategy<Value> {
    match ty {
        KeyType::Quantity(_) | KeyType::Bare => number().prop_map(Value::Number).boxed(),
        KeyType::Count => (0u32..100_000).prop_map(|n| Value::Number(n as f64)).boxed(),
        KeyType::Name => ident().prop_map(Value::Name).boxed(),
        KeyType::List => proptest::collection::vec(ident(), 1..4).prop_map(Value::List).boxed(),
        KeyType::Choice(options) => proptest::sample::select(options.to_vec())
            .prop_map(|s| Value::Name(s.to_string()))
            .boxed(),
    }
}

fn statement() -> impl Strategy<Value = Statement> {
    (proptest::sample::select(KINDS.to_vec()), ident()).prop_flat_map(|(kind, id)| {
        let keys = keys_of(kind);
        let params: Vec<BoxedStrategy<Option<(String, Value)>>> = keys
            .into_iter()
            .map(|k| {
                proptest::option::of(value(key_type(kind, k).unwrap()).prop_map(move |v| (k.to_string(), v)))
                    .boxed()
            })
            .collect();
        params.prop_map(move |ps| {
            let mut s = Statement::new(kind, id.clone());
            for (k, v) in ps.into_iter().flatten() {
                s = s.with(&k, v);
            }
            s
        })
    })
}

pub fn circuit() -> impl Strategy<Value = Circuit> {
    proptest::collection::vec(statement(), 0..12).prop_map(|mut statements| {
        // identifiers are unique across the whole file
        for (i, s) in statements.iter_mut().enumerate() {
            s.id = format!("{}_{i}", s.id);
        }
        Circuit { statements }
    })
}
