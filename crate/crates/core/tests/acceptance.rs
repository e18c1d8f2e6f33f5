//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use tubelogic::engine::{
    apply_params, calibrate_oscillator, dc_operating_point, extract_frequency, simulate,
    CalibrationBounds, CalibrationTargets, SimConfig, Trace,
};
use tubelogic::netdom::{valve_step, HysteresisThresholds, PhysicalDefaults, Pressure, ValveState};
use tubelogic::netlist::{bom, expand, format, parse, Circuit};
use tubelogic::verify::{
    check_against_boolean, fanout_limit, truth_table, FanoutLimit, LogicLevels, SourceSpec,
    DEFAULT_FANOUT_CAP,
};

const NOT_TBL: &str = include_str!("../../../netlists/not.tbl");
const NOR_TBL: &str = include_str!("../../../netlists/nor.tbl");
const NAND_TBL: &str = include_str!("../../../netlists/nand.tbl");
const AND_TBL: &str = include_str!("../../../netlists/and.tbl");
const OR_TBL: &str = include_str!("../../../netlists/or.tbl");
const RING2_TBL: &str = include_str!("../../../netlists/ring2.tbl");
const RING3_TBL: &str = include_str!("../../../netlists/ring3.tbl");
const RING4_TBL: &str = include_str!("../../../netlists/ring4.tbl");
const RING5_TBL: &str = include_str!("../../../netlists/ring5.tbl");
const SYNTAX_ERROR_TBL: &str = include_str!("../../../netlists/syntax_error.tbl");

/// Required clearance of a logic level past its read threshold, kPa.
const LEVEL_MARGIN_KPA: f64 = 1.0;
const NOT_HIGH_KPA: f64 = 96.7;
const NOT_HIGH_REL_TOL: f64 = 0.01;
const RING_FREQ_HZ: f64 = 15.0;
const RING_PEAK_KPA: f64 = 35.0;
const RING_REL_TOL: f64 = 0.10;
const PHASE_DEG: f64 = 120.0;
const PHASE_TOL_DEG: f64 = 15.0;
/// Maximum swing over the last 20% of an even ring's trace, kPa.
const SETTLED_SPAN_KPA: f64 = 0.5;
const DC_RESIDUAL_MAX: f64 = 1e-9;
const VOLUME_BALANCE_REL_TOL: f64 = 0.005;
const RC_REL_TOL: f64 = 0.01;
const RELAY_TRAJECTORIES: u32 = 1000;
const ROUND_TRIP_CASES: u32 = 10_000;
const SIM_T_END_S: f64 = 2.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn cfg() -> SimConfig {
    SimConfig::default().with_t_end(SIM_T_END_S)
}

fn parsed(text: &str) -> Circuit {
    parse(text).expect("bundled netlist parses")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(c: &Circuit) -> Result<Trace, String> {
    let net = expand(c).map_err(|e| e.to_string())?;
    simulate(&net, &cfg()).map_err(|e| e.to_string())
}

fn ring_frequency(c: &Circuit, probe: &str) -> Result<f64, String> {
    let net = expand(c).map_err(|e| e.to_string())?;
    let tr = simulate(&net, &cfg()).map_err(|e| e.to_string())?;
    let id = net.node_id(probe).ok_or(format!("no node {probe}"))?;
    extract_frequency(&tr, id)
        .map(|r| r.frequency_hz)
        .map_err(|e| e.to_string())
}

fn gate_tables() -> Outcome {
    let lv = LogicLevels::default();
    let cases = [
        ("NOT", NOT_TBL, &["A"][..], "!A"),
        ("NOR", NOR_TBL, &["A", "B"][..], "!(A|B)"),
        ("NAND", NAND_TBL, &["A", "B"][..], "!(A&B)"),
        ("AND", AND_TBL, &["A", "B"][..], "A&B"),
        ("OR", OR_TBL, &["A", "B"][..], "A|B"),
    ];
    let mut worst = f64::INFINITY;
    for (name, text, inputs, expr) in cases {
        let t = truth_table(&parsed(text), inputs, &["Q"], &lv).map_err(|e| format!("{name}: {e}"))?;
        let m = check_against_boolean(&t, expr).map_err(|e| e.to_string())?;
        if !m.passed() {
            return Err(format!("{name}: {}", m.to_string().trim()));
        }
        for r in &t.rows {
            let p = r.pressures_kpa[0];
            let margin = if r.outputs[0] {
                p - lv.read_high_min
            } else {
                lv.read_low_max - p
            };
            worst = worst.min(margin);
        }
    }
    // an explicit NOR followed by NOT must read as OR
    let de_morgan = parsed(
        "source SUP pressure=145kPa\ngate NOR n in=A,B out=x supply=SUP\ngate NOT i in=x out=Q supply=SUP",
    );
    let t = truth_table(&de_morgan, &["A", "B"], &["Q"], &lv).map_err(|e| e.to_string())?;
    let or = truth_table(&parsed(OR_TBL), &["A", "B"], &["Q"], &lv).map_err(|e| e.to_string())?;
    let same = t.rows.iter().zip(&or.rows).all(|(a, b)| a.outputs == b.outputs);
    check(
        worst >= LEVEL_MARGIN_KPA && same,
        format!("5 gates match, worst clearance {worst:.2} kPa, NOT(NOR) = OR: {same}"),
    )
}

fn not_levels() -> Outcome {
    let lv = LogicLevels::default();
    let t = truth_table(&parsed(NOT_TBL), &["A"], &["Q"], &lv).map_err(|e| e.to_string())?;
    let (lo_in, hi_in) = (t.rows[0].pressures_kpa[0], t.rows[1].pressures_kpa[0]);
    check(
        rel(lo_in, NOT_HIGH_KPA) <= NOT_HIGH_REL_TOL && hi_in == 0.0,
        format!("input low -> {lo_in:.3} kPa, input high -> {hi_in} kPa"),
    )
}

fn ring_calibration() -> Outcome {
    // start from default device parameters and fit them
    let mut template = parsed(RING3_TBL);
    let osc = template.find_mut("osc").expect("ring statement");
    osc.params.remove("compliance");
    osc.params.remove("gopen");
    let net = expand(&template).map_err(|e| e.to_string())?;
    let probe = net.node_id("a.sense").expect("sense port");
    let fit = calibrate_oscillator(
        &net,
        probe,
        &CalibrationTargets::new(RING_FREQ_HZ, RING_PEAK_KPA),
        &CalibrationBounds::default(),
        &cfg(),
    )
    .map_err(|e| e.to_string())?;
    let tuned = apply_params(&net, fit.params);
    let tr = simulate(&tuned, &cfg()).map_err(|e| e.to_string())?;
    let r = extract_frequency(&tr, probe).map_err(|e| e.to_string())?;
    let phases: Vec<f64> = r.probes.iter().skip(1).filter_map(|p| p.phase_deg).collect();
    let phase_ok = phases.len() == 2
        && phases.iter().all(|&p| (p.min(360.0 - p) - PHASE_DEG).abs() <= PHASE_TOL_DEG);
    check(
        rel(r.frequency_hz, RING_FREQ_HZ) <= RING_REL_TOL
            && rel(r.peak_kpa, RING_PEAK_KPA) <= RING_REL_TOL
            && phase_ok,
        format!(
            "{:.3} Hz, peak {:.2} kPa, phases {:?} deg (C = {:.5} mL/kPa, gopen = {:.1} mL/(s kPa), {} runs)",
            r.frequency_hz,
            r.peak_kpa,
            phases.iter().map(|p| p.round()).collect::<Vec<_>>(),
            fit.params.compliance * 1e9,
            fit.params.open_conductance * 1e9,
            fit.simulations
        ),
    )
}

fn tail_span(tr: &Trace) -> f64 {
    let t_end = tr.samples.last().map_or(0.0, |s| s.time);
    let tail: Vec<_> = tr.samples.iter().filter(|s| s.time >= 0.8 * t_end).collect();
    (0..tr.probes.len())
        .map(|j| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.pressures[j]), hi.max(s.pressures[j]))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn odd_even() -> Outcome {
    let f3 = ring_frequency(&parsed(RING3_TBL), "a.sense")?;
    let f5 = ring_frequency(&parsed(RING5_TBL), "a.sense")?;
    let s2 = tail_span(&run(&parsed(RING2_TBL))?);
    let s4 = tail_span(&run(&parsed(RING4_TBL))?);
    check(
        s2 < SETTLED_SPAN_KPA && s4 < SETTLED_SPAN_KPA,
        format!("n=3 {f3:.2} Hz, n=5 {f5:.2} Hz, n=2 tail span {s2:.3} kPa, n=4 tail span {s4:.3} kPa"),
    )
}

fn sweeps() -> Outcome {
    let base = parsed(RING3_TBL);
    let sweeps = [
        ("compliance", ["0.03848", "0.05772", "0.07696"]),
        ("pulldown_len", ["15cm", "17.5cm", "20cm"]),
        ("control_len", ["7.5cm", "10cm", "15cm"]),
    ];
    let mut detail = Vec::new();
    let mut ok = true;
    for (key, values) in sweeps {
        let mut fs = Vec::new();
        for v in values {
            let mut c = base.clone();
            c.set("osc", key, v).map_err(|e| e.to_string())?;
            fs.push(ring_frequency(&c, "a.sense")?);
        }
        ok &= fs.windows(2).all(|w| w[1] <= w[0]);
        detail.push(format!(
            "{key} {}",
            fs.iter().map(|f| format!("{f:.2}")).collect::<Vec<_>>().join(">")
        ));
    }
    check(ok, format!("Hz: {}", detail.join(", ")))
}

fn conservation() -> Outcome {
    // DC residual over every gate and input row
    let mut worst_dc = 0.0f64;
    for (text, inputs) in [
        (NOT_TBL, &["A"][..]),
        (NOR_TBL, &["A", "B"][..]),
        (NAND_TBL, &["A", "B"][..]),
        (AND_TBL, &["A", "B"][..]),
        (OR_TBL, &["A", "B"][..]),
    ] {
        let net = expand(&parsed(text)).map_err(|e| e.to_string())?;
        for k in 0..1usize << inputs.len() {
            let mut pinned = net.clone();
            for (i, name) in inputs.iter().enumerate() {
                let high = k >> (inputs.len() - 1 - i) & 1 == 1;
                let id = pinned.node_id(name).expect("input node");
                pinned
                    .fix_node(id, Pressure::from_kpa(if high { 145.0 } else { 0.0 }))
                    .map_err(|e| e.to_string())?;
            }
            let ss = dc_operating_point(&pinned).map_err(|e| e.to_string())?;
            worst_dc = worst_dc.max(ss.relative_residual);
        }
    }

    // RC charge through a 1 m tube into one balloon
    let rc = parsed(
        "source S pressure=100kPa\ntube t from=S to=n length=100cm\nballoon b node=n rest=1mL compliance=0.03\nprobe n",
    );
    let tau = 128.0 * 1.81e-5 * 1.0 / (PI * 1e-12) * 0.03e-9;
    let net = expand(&rc).map_err(|e| e.to_string())?;
    let tr = simulate(&net, &SimConfig::default().with_t_end(3.0 * tau)).map_err(|e| e.to_string())?;
    let mut inflow = 0.0;
    for w in tr.samples.windows(2) {
        inflow += 0.5 * (w[0].inflows[0] + w[1].inflows[0]) * (w[1].time - w[0].time);
    }
    let gained = tr.samples.last().unwrap().volumes[0] - tr.samples[0].volumes[0];
    let balance = rel(inflow, gained);
    let mut curve = 0.0f64;
    for k in [1.0, 3.0] {
        let s = tr
            .samples
            .iter()
            .min_by(|a, b| (a.time - k * tau).abs().total_cmp(&(b.time - k * tau).abs()))
            .unwrap();
        let exact = 100.0 * (1.0 - (-s.time / tau).exp());
        curve = curve.max(rel(s.pressures[0], exact));
    }
    check(
        worst_dc <= DC_RESIDUAL_MAX && balance <= VOLUME_BALANCE_REL_TOL && curve <= RC_REL_TOL,
        format!(
            "DC residual {worst_dc:.1e}, volume vs inflow {:.4}%, RC curve error {:.4}%",
            balance * 100.0,
            curve * 100.0
        ),
    )
}

fn hysteresis() -> Outcome {
    let th = HysteresisThresholds::new(85.0, 60.0).map_err(|e| e.to_string())?;
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: RELAY_TRAJECTORIES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let strategy = (any::<bool>(), proptest::collection::vec(-20.0f64..200.0, 1..400));
    let result = runner.run(&strategy, |(closed, path)| {
        let mut s = if closed { ValveState::Closed } else { ValveState::Open };
        for p in path {
            let next = valve_step(s, Pressure::from_kpa(p), &th);
            prop_assert!(next == s || p <= th.p_deflate || p >= th.p_inflate, "switched at {p} kPa");
            s = next;
        }
        Ok(())
    });
    match result {
        Ok(()) => Ok(format!("{RELAY_TRAJECTORIES} random trajectories, no switch inside (60, 85) kPa")),
        Err(e) => Err(e.to_string()),
    }
}

fn fanout() -> Outcome {
    let d = PhysicalDefaults::default();
    let lv = LogicLevels::default();
    let tube = |len: f64| 128.0 * 1.81e-5 * len / (PI * 1e-12);
    let (rs, rp) = (tube(d.device_tube_cm / 100.0), tube(d.pulldown_cm / 100.0));
    let rb = rs + 1.0 / (d.open_conductance * 1e-9) + rp;
    // two open branches on the source leave 84 kPa at the load
    let rint = 145.0 * rp / (2.0 * 84.0) - rb / 2.0;
    let sag = fanout_limit(&d, &SourceSpec { pressure: 145.0, internal_resistance: rint }, &lv, DEFAULT_FANOUT_CAP)
        .map_err(|e| e.to_string())?;
    let ideal = fanout_limit(&d, &SourceSpec { pressure: 145.0, internal_resistance: 0.0 }, &lv, DEFAULT_FANOUT_CAP)
        .map_err(|e| e.to_string())?;
    let stiff = fanout_limit(&d, &SourceSpec { pressure: 145.0, internal_resistance: 2e6 }, &lv, DEFAULT_FANOUT_CAP)
        .map_err(|e| e.to_string())?;
    let monotone = stiff.samples.windows(2).all(|w| w[1].control_kpa <= w[0].control_kpa);
    let ideal_ok = match ideal.max_gates {
        FanoutLimit::Exactly(n) | FanoutLimit::AtLeast(n) => n >= 1,
    };
    check(
        sag.max_gates == FanoutLimit::Exactly(0) && ideal_ok && monotone,
        format!(
            "84 kPa source: {:?} (reads {:.3} kPa), ideal: {:?}, 2e6 Pa s/m3 source: {:?} over {} monotone samples",
            sag.max_gates,
            sag.samples[0].control_kpa,
            ideal.max_gates,
            stiff.max_gates,
            stiff.samples.len()
        ),
    )
}

fn parser() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: ROUND_TRIP_CASES,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&common::circuit(), |c| {
            let text = format(&c);
            let back = parse(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(back, c);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let err = parse(SYNTAX_ERROR_TBL).expect_err("malformed netlist is rejected");
    let diag = err.to_string();
    check(
        err.line() == 4 && diag.starts_with("4:"),
        format!("{ROUND_TRIP_CASES} ASTs round-trip; malformed file reports `{diag}`"),
    )
}

fn bill_of_materials() -> Outcome {
    let one = bom(&parsed(NOT_TBL)).total_usd();
    let ring = bom(&parsed(RING3_TBL)).total_usd();
    let empty = bom(&Circuit::default()).total_usd();
    let cents = |x: f64| (x * 100.0).round() as i64;
    check(
        cents(one) == 45 && cents(ring) == 135 && cents(empty) == 0,
        format!("NOT ${one:.2}, 3-ring ${ring:.2}, empty ${empty:.2}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("gate truth tables", gate_tables),
        ("NOT DC levels", not_levels),
        ("ring calibration", ring_calibration),
        ("odd and even rings", odd_even),
        ("parameter sweeps", sweeps),
        ("conservation", conservation),
        ("relay hysteresis", hysteresis),
        ("fan-out", fanout),
        ("parser", parser),
        ("bill of materials", bill_of_materials),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
