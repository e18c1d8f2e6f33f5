use serde::Serialize;

use super::{LogicLevels, VerifyError};
use crate::engine::solve_with_states;
use crate::netdom::{PhysicalDefaults, Pressure, ValveState, SI_PER_KPA_S_PER_ML};
use crate::netlist::{expand_with, Circuit, GateKind, Kind, Statement, Value};

pub const DEFAULT_FANOUT_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceSpec {
    /// kPa
    pub pressure: f64,
    /// Pa·s/m³
    pub internal_resistance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FanoutLimit {
    Exactly(usize),
    /// Every probed N up to the cap was drivable.
    AtLeast(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoutSample {
    pub loads: usize,
    /// Pressure at the first load's balloon, kPa.
    pub control_kpa: f64,
    /// Pressure at the shared supply node, kPa.
    pub supply_kpa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FanoutReport {
    pub max_gates: FanoutLimit,
    /// Every evaluated N, ascending.
    pub samples: Vec<FanoutSample>,
    pub threshold_kpa: f64,
}

fn circuit(source: &SourceSpec, loads: usize) -> Circuit {
    let mut statements = vec![
        Statement::new(Kind::Source, "SUP")
            .with("pressure", Value::Number(source.pressure))
            .with(
                "rint",
                Value::Number(source.internal_resistance / SI_PER_KPA_S_PER_ML),
            ),
        Statement::new(Kind::Atm, "ATM"),
        Statement::new(Kind::Gate(GateKind::Not), "drv")
            .with("in", Value::List(vec!["x".into()]))
            .with("out", Value::Name("bus".into()))
            .with("supply", Value::Name("SUP".into())),
    ];
    for k in 0..loads {
        statements.push(
            Statement::new(Kind::Gate(GateKind::Not), format!("load{k}"))
                .with("in", Value::List(vec!["bus".into()]))
                .with("out", Value::Name(format!("y{k}")))
                .with("supply", Value::Name("SUP".into())),
        );
    }
    Circuit { statements }
}

/// Control pressure seen by the loads while the driver outputs HIGH.
///
/// Every valve is held open: this is the state at the moment the driver
/// switches, before any load balloon has inflated, and it is when the
/// shared supply carries the most current through the pull-downs.
fn sample(
    defaults: &PhysicalDefaults,
    source: &SourceSpec,
    levels: &LogicLevels,
    loads: usize,
) -> Result<FanoutSample, VerifyError> {
    let mut net = expand_with(&circuit(source, loads), defaults)?;
    let x = net.node_id("x").expect("driver input");
    net.fix_node(x, Pressure::from_kpa(levels.drive_low))?;
    let states = vec![ValveState::Open; net.valves.len()];
    let p = solve_with_states(&net, &states)?;
    let ctrl = net.node_id("load0.ctrl").expect("first load");
    let sup = net.node_id("SUP").expect("supply");
    Ok(FanoutSample {
        loads,
        control_kpa: p[ctrl.0].kpa(),
        supply_kpa: p[sup.0].kpa(),
    })
}

/// Largest number of NOT-gate loads one NOT gate can switch from a shared
/// source. Sweeps N = 1, 2, 4, … up to `cap`, then bisects the first
/// failing interval.
pub fn fanout_limit(
    defaults: &PhysicalDefaults,
    source: &SourceSpec,
    levels: &LogicLevels,
    cap: usize,
) -> Result<FanoutReport, VerifyError> {
    if !(source.pressure > 0.0) || !(source.internal_resistance >= 0.0) {
        return Err(VerifyError::InvalidLevels(format!(
            "source needs pressure > 0 and internal resistance >= 0, got {} kPa and {}",
            source.pressure, source.internal_resistance
        )));
    }
    let cap = cap.max(1);
    let thr = levels.read_high_min;
    let mut samples = Vec::new();
    let eval = |n: usize, samples: &mut Vec<FanoutSample>| -> Result<bool, VerifyError> {
        let s = sample(defaults, source, levels, n)?;
        samples.push(s);
        Ok(s.control_kpa >= thr)
    };

    let mut good = 0;
    let mut bad = None;
    let mut n = 1;
    loop {
        if eval(n, &mut samples)? {
            good = n;
            if n == cap {
                break;
            }
            n = (2 * n).min(cap);
        } else {
            bad = Some(n);
            break;
        }
    }
    if let Some(mut hi) = bad {
        let mut lo = good;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if eval(mid, &mut samples)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        good = lo;
    }
    samples.sort_by_key(|s| s.loads);
    Ok(FanoutReport {
        max_gates: if bad.is_some() {
            FanoutLimit::Exactly(good)
        } else {
            FanoutLimit::AtLeast(good)
        },
        samples,
        threshold_kpa: thr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_source_is_unbounded() {
        let r = fanout_limit(
            &PhysicalDefaults::default(),
            &SourceSpec {
                pressure: 145.0,
                internal_resistance: 0.0,
            },
            &LogicLevels::default(),
            64,
        )
        .unwrap();
        assert_eq!(r.max_gates, FanoutLimit::AtLeast(64));
        assert!(r.samples.iter().all(|s| (s.control_kpa - r.samples[0].control_kpa).abs() < 1e-9));
    }

    #[test]
    fn stiff_source_bisects() {
        let r = fanout_limit(
            &PhysicalDefaults::default(),
            &SourceSpec {
                pressure: 145.0,
                internal_resistance: 2e6,
            },
            &LogicLevels::default(),
            DEFAULT_FANOUT_CAP,
        )
        .unwrap();
        let FanoutLimit::Exactly(n) = r.max_gates else {
            panic!("{:?}", r.max_gates)
        };
        assert!(n >= 1);
        let at = |k: usize| r.samples.iter().find(|s| s.loads == k).unwrap().control_kpa;
        assert!(at(n) >= 85.0 && at(n + 1) < 85.0);
        for w in r.samples.windows(2) {
            assert!(w[1].control_kpa <= w[0].control_kpa);
        }
    }

    #[test]
    fn source_sagging_to_84_kpa_drives_nothing() {
        // two identical open branches share the source: supply tube, kink,
        // pull-down; the idle control tube carries no DC flow
        let mu = 1.81e-5;
        let tube = |len: f64| 128.0 * mu * len / (std::f64::consts::PI * 1e-12);
        let (rs, rp, rv) = (tube(0.075), tube(0.15), 1.0 / 1e-5);
        let rb = rs + rv + rp;
        let rint = 145.0 * rp / (2.0 * 84.0) - rb / 2.0;
        assert!(rint > 0.0);
        let r = fanout_limit(
            &PhysicalDefaults::default(),
            &SourceSpec {
                pressure: 145.0,
                internal_resistance: rint,
            },
            &LogicLevels::default(),
            DEFAULT_FANOUT_CAP,
        )
        .unwrap();
        assert_eq!(r.max_gates, FanoutLimit::Exactly(0));
        assert_eq!(r.samples.len(), 1);
        assert!((r.samples[0].control_kpa - 84.0).abs() < 1e-6, "{:?}", r.samples);
    }
}
