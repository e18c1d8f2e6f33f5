//! Simulation and verification of pneumatic logic built from kinked tubes,
//! balloons and drinking straws.

pub mod engine;
pub mod netdom;
pub mod netlist;
pub mod verify;

pub use engine::{
    calibrate_oscillator, dc_operating_point, extract_frequency, simulate, EngineError,
    OscillationReport, SimConfig, SteadyState, Trace,
};
pub use netdom::{DomainError, NodeId, PneumaticNetwork, Pressure, ValveState};
