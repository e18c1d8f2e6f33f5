//! Fits valve balloon compliance and open conductance so that a ring
//! oscillator hits a target frequency and peak pressure.
//!
//! The peak depends on the conductance ratio of the output stage and not on
//! the compliance, while the period is proportional to the compliance. The
//! search alternates a log-bisection of the conductance on the peak with a
//! proportional rescale of the compliance on the frequency.

use super::oscillation::extract_frequency;
use super::transient::{simulate, SimConfig};
use super::EngineError;
use crate::netdom::{NodeId, PneumaticNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTargets {
    pub frequency_hz: f64,
    pub peak_kpa: f64,
    /// Relative tolerance applied to both targets.
    pub tolerance: f64,
}

impl CalibrationTargets {
    pub fn new(frequency_hz: f64, peak_kpa: f64) -> Self {
        CalibrationTargets {
            frequency_hz,
            peak_kpa,
            tolerance: 0.02,
        }
    }
}

/// Values applied to every valve of the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    /// m³/Pa
    pub compliance: f64,
    /// m³/(Pa·s)
    pub open_conductance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBounds {
    /// m³/Pa
    pub compliance: (f64, f64),
    /// m³/(Pa·s)
    pub open_conductance: (f64, f64),
    /// Outer iterations of the alternating search.
    pub max_rounds: usize,
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        CalibrationBounds {
            compliance: (5e-12, 5e-10),
            open_conductance: (1e-9, 1e-4),
            max_rounds: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub params: CalibrationParams,
    pub frequency_hz: f64,
    pub peak_kpa: f64,
    pub simulations: usize,
}

impl CalibrationOutcome {
    fn error(&self, t: &CalibrationTargets) -> f64 {
        let ef = (self.frequency_hz / t.frequency_hz - 1.0).abs();
        let ep = (self.peak_kpa / t.peak_kpa - 1.0).abs();
        ef.max(ep)
    }
}

/// Copy of `net` with `params` applied to every valve.
pub fn apply_params(net: &PneumaticNetwork, params: CalibrationParams) -> PneumaticNetwork {
    let mut out = net.clone();
    for v in &mut out.valves {
        v.balloon.compliance = params.compliance;
        v.open_conductance = params.open_conductance;
    }
    out
}

struct Search<'a> {
    template: &'a PneumaticNetwork,
    probe: NodeId,
    cfg: &'a SimConfig,
    runs: usize,
    best: Option<CalibrationOutcome>,
    targets: CalibrationTargets,
}

impl Search<'_> {
    /// `None` when the candidate does not oscillate.
    fn eval(&mut self, params: CalibrationParams) -> Result<Option<CalibrationOutcome>, EngineError> {
        self.runs += 1;
        let net = apply_params(self.template, params);
        let trace = simulate(&net, self.cfg)?;
        let report = match extract_frequency(&trace, self.probe) {
            Ok(r) => r,
            Err(EngineError::NoOscillation(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let out = CalibrationOutcome {
            params,
            frequency_hz: report.frequency_hz,
            peak_kpa: report.peak_kpa,
            simulations: self.runs,
        };
        let better = match &self.best {
            None => true,
            Some(b) => out.error(&self.targets) < b.error(&self.targets),
        };
        if better {
            self.best = Some(out.clone());
        }
        Ok(Some(out))
    }

    fn done(&self, o: &Option<CalibrationOutcome>) -> bool {
        o.as_ref()
            .is_some_and(|o| o.error(&self.targets) <= self.targets.tolerance)
    }
}

pub fn calibrate_oscillator(
    template: &PneumaticNetwork,
    probe: NodeId,
    targets: &CalibrationTargets,
    bounds: &CalibrationBounds,
    cfg: &SimConfig,
) -> Result<CalibrationOutcome, EngineError> {
    let first = template
        .valves
        .first()
        .ok_or_else(|| EngineError::InvalidConfig("network has no valves to calibrate".into()))?;
    for (name, v) in [
        ("target frequency", targets.frequency_hz),
        ("target peak", targets.peak_kpa),
        ("tolerance", targets.tolerance),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(EngineError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
    }
    let (c_lo, c_hi) = bounds.compliance;
    let (g_lo, g_hi) = bounds.open_conductance;
    if !(0.0 < c_lo && c_lo <= c_hi && 0.0 < g_lo && g_lo <= g_hi) {
        return Err(EngineError::InvalidConfig("empty calibration bounds".into()));
    }

    let mut s = Search {
        template,
        probe,
        cfg,
        runs: 0,
        best: None,
        targets: *targets,
    };
    let mut p = CalibrationParams {
        compliance: first.balloon.compliance.clamp(c_lo, c_hi),
        open_conductance: first.open_conductance.clamp(g_lo, g_hi),
    };
    let mut cur = s.eval(p)?;
    if s.done(&cur) {
        return Ok(cur.unwrap());
    }

    for _ in 0..bounds.max_rounds {
        let peak_ok = cur
            .as_ref()
            .is_some_and(|o| (o.peak_kpa / targets.peak_kpa - 1.0).abs() <= 0.5 * targets.tolerance);
        if !peak_ok {
            // peak rises with the open conductance; a non-oscillating
            // candidate counts as too low
            let (mut lo, mut hi) = (g_lo.ln(), g_hi.ln());
            for _ in 0..24 {
                let mid = 0.5 * (lo + hi);
                p.open_conductance = mid.exp();
                cur = s.eval(p)?;
                match &cur {
                    Some(o) if (o.peak_kpa / targets.peak_kpa - 1.0).abs() <= 0.25 * targets.tolerance => break,
                    Some(o) if o.peak_kpa > targets.peak_kpa => hi = mid,
                    _ => lo = mid,
                }
                if hi - lo < 1e-4 {
                    break;
                }
            }
        }
        if s.done(&cur) {
            return Ok(cur.unwrap());
        }
        let Some(o) = &cur else { break };
        let scaled = (p.compliance * o.frequency_hz / targets.frequency_hz).clamp(c_lo, c_hi);
        if scaled == p.compliance {
            break;
        }
        p.compliance = scaled;
        cur = s.eval(p)?;
        if s.done(&cur) {
            return Ok(cur.unwrap());
        }
    }

    let best = s.best.unwrap_or(CalibrationOutcome {
        params: p,
        frequency_hz: 0.0,
        peak_kpa: 0.0,
        simulations: s.runs,
    });
    Err(EngineError::CalibrationFailed(Box::new(CalibrationOutcome {
        simulations: s.runs,
        ..best
    })))
}
