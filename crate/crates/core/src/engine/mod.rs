//! DC operating point, event-driven transient integration, oscillation
//! analysis and calibration.

mod calibrate;
mod dc;
mod flow;
mod integrator;
mod oscillation;
pub(crate) mod sparse;
mod transient;

pub use calibrate::{
    apply_params, calibrate_oscillator, CalibrationBounds, CalibrationOutcome, CalibrationParams,
    CalibrationTargets,
};
pub use dc::{dc_operating_point, dc_operating_point_from, solve_with_states, DcMethod, SteadyState};
pub use integrator::{DormandPrince, StepOutcome, Tolerances};
pub use oscillation::{extract_frequency, extract_frequency_with, FrequencyOptions, OscillationReport, ProbeStats};
pub use transient::{simulate, InitialCondition, Sample, SimConfig, Trace, ValveEvent};

use crate::netdom::DomainError;

/// Largest valve count the exhaustive DC fallback will enumerate.
pub const MAX_ENUMERATED_VALVES: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Network(#[from] DomainError),
    #[error("AstableCircuit: no self-consistent valve assignment exists")]
    AstableCircuit,
    #[error("Singular: {0}")]
    Singular(String),
    #[error("TooManyValves: {count} valves exceed the enumeration limit of {MAX_ENUMERATED_VALVES}")]
    TooManyValves { count: usize },
    #[error("NonConvergence: step size underflow at t = {time} s")]
    NonConvergence { time: f64 },
    #[error("NoOscillation: {0}")]
    NoOscillation(String),
    #[error("CalibrationFailed: best f = {:.3} Hz, peak = {:.3} kPa", .0.frequency_hz, .0.peak_kpa)]
    CalibrationFailed(Box<CalibrationOutcome>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}
