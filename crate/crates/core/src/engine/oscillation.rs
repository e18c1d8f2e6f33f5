use serde::Serialize;

use super::{EngineError, Trace};
use crate::netdom::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyOptions {
    /// Leading fraction of the trace treated as start-up transient.
    pub transient_fraction: f64,
    /// Minimum peak-to-trough span, kPa.
    pub amplitude_floor_kpa: f64,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        FrequencyOptions {
            transient_fraction: 0.2,
            amplitude_floor_kpa: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeStats {
    pub node: String,
    pub peak_kpa: f64,
    pub trough_kpa: f64,
    /// Lag behind the reference probe, degrees in [0, 360). `None` when the
    /// probe does not oscillate.
    pub phase_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub probe: String,
    pub frequency_hz: f64,
    pub period_s: f64,
    /// Mean of per-cycle maxima, kPa.
    pub peak_kpa: f64,
    /// Mean of per-cycle minima, kPa.
    pub trough_kpa: f64,
    /// Fraction of each cycle spent above the midline.
    pub duty: f64,
    pub cycles: usize,
    pub probes: Vec<ProbeStats>,
}

struct Cycles {
    crossings: Vec<f64>,
    peak: f64,
    trough: f64,
    duty: f64,
}

fn cycles(series: &[(f64, f64)], opts: &FrequencyOptions) -> Result<Cycles, EngineError> {
    if series.len() < 2 {
        return Err(EngineError::NoOscillation("trace has fewer than 2 samples".into()));
    }
    let t0 = series[0].0;
    let t1 = series[series.len() - 1].0;
    let cut = t0 + opts.transient_fraction * (t1 - t0);
    let kept: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= cut).collect();
    let (lo, hi) = kept
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| (lo.min(p), hi.max(p)));
    if kept.len() < 2 || !(hi - lo >= opts.amplitude_floor_kpa) {
        return Err(EngineError::NoOscillation(format!(
            "peak-to-trough span {:.4} kPa is below the {} kPa floor",
            (hi - lo).max(0.0),
            opts.amplitude_floor_kpa
        )));
    }
    let mid = 0.5 * (hi + lo);
    let crossings: Vec<f64> = kept
        .windows(2)
        .filter(|w| w[0].1 < mid && w[1].1 >= mid)
        .map(|w| {
            let ((ta, pa), (tb, pb)) = (w[0], w[1]);
            ta + (mid - pa) / (pb - pa) * (tb - ta)
        })
        .collect();
    if crossings.len() < 3 {
        return Err(EngineError::NoOscillation(format!(
            "only {} rising midline crossings after the transient",
            crossings.len()
        )));
    }

    let mut peaks = Vec::new();
    let mut troughs = Vec::new();
    let mut above = 0usize;
    let mut total = 0usize;
    for w in crossings.windows(2) {
        let cycle = kept.iter().filter(|&&(t, _)| t >= w[0] && t < w[1]);
        let (mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(_, p) in cycle {
            cmin = cmin.min(p);
            cmax = cmax.max(p);
            total += 1;
            if p > mid {
                above += 1;
            }
        }
        if cmax.is_finite() {
            peaks.push(cmax);
            troughs.push(cmin);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(Cycles {
        peak: mean(&peaks),
        trough: mean(&troughs),
        duty: if total > 0 {
            above as f64 / total as f64
        } else {
            0.0
        },
        crossings,
    })
}

/// Circular mean of the lag from each reference crossing to the next
/// crossing of `other`, in degrees.
fn phase_lag(reference: &[f64], other: &[f64], period: f64) -> Option<f64> {
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut n = 0;
    for &c in &reference[..reference.len() - 1] {
        if let Some(&o) = other.iter().find(|&&o| o >= c) {
            let angle = ((o - c) / period).rem_euclid(1.0) * std::f64::consts::TAU;
            sx += angle.cos();
            sy += angle.sin();
            n += 1;
        }
    }
    if n == 0 {
        return None;
    }
    Some(sy.atan2(sx).to_degrees().rem_euclid(360.0))
}

pub fn extract_frequency(trace: &Trace, probe: NodeId) -> Result<OscillationReport, EngineError> {
    extract_frequency_with(trace, probe, &FrequencyOptions::default())
}

pub fn extract_frequency_with(
    trace: &Trace,
    probe: NodeId,
    opts: &FrequencyOptions,
) -> Result<OscillationReport, EngineError> {
    let idx = trace
        .probe_index(probe)
        .ok_or_else(|| EngineError::UnknownNode(probe.to_string()))?;
    let main = cycles(&trace.series(idx), opts)?;
    let n = main.crossings.len();
    let period = (main.crossings[n - 1] - main.crossings[0]) / (n - 1) as f64;

    let probes = (0..trace.probes.len())
        .map(|j| {
            let name = trace.probe_names[j].clone();
            match cycles(&trace.series(j), opts) {
                Ok(c) => ProbeStats {
                    node: name,
                    peak_kpa: c.peak,
                    trough_kpa: c.trough,
                    phase_deg: phase_lag(&main.crossings, &c.crossings, period),
                },
                Err(_) => {
                    let series = trace.series(j);
                    let peak = series.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
                    let trough = series.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
                    ProbeStats {
                        node: name,
                        peak_kpa: peak,
                        trough_kpa: trough,
                        phase_deg: None,
                    }
                }
            }
        })
        .collect();

    Ok(OscillationReport {
        probe: trace.probe_names[idx].clone(),
        frequency_hz: 1.0 / period,
        period_s: period,
        peak_kpa: main.peak,
        trough_kpa: main.trough,
        duty: main.duty,
        cycles: n - 1,
        probes,
    })
}
