//! Domain types for pneumatic networks.
//!
//! Everything here is plain value data. External quantities are gauge
//! pressures in kPa; internally every computation runs in SI (Pa, m³, m, s).

mod defaults;
mod element;
mod network;

pub use defaults::{PhysicalDefaults, SI_PER_KPA_S_PER_ML, SI_PER_ML_PER_KPA};
pub use element::{
    balloon_pressure, element_flow, tube_resistance, valve_step, BalloonParams, BalloonReading,
    ElementRef, HysteresisThresholds, KinkValveDevice, TubeElement, TubeGeometry, TubeRole,
    ValveState,
};
pub use network::{Balloon, Capacitor, Node, NodeKind, PneumaticNetwork, Source};
pub(crate) use network::UnionFind;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Dynamic viscosity of air at room temperature, Pa·s.
pub const AIR_VISCOSITY: f64 = 1.81e-5;

/// Standard atmosphere in kPa; gauge pressure cannot go below its negative.
pub const ATMOSPHERE_KPA: f64 = 101.325;

pub const PA_PER_KPA: f64 = 1e3;
pub const M3_PER_ML: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("invalid {what}: {value}")]
    InvalidParameter { what: &'static str, value: f64 },
    #[error("pressure {0} kPa is below vacuum")]
    BelowVacuum(f64),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("network has no fixed-pressure node")]
    NoFixedNode,
    #[error("network has no atmosphere node")]
    NoAtmosphere,
    #[error("fixed nodes `{0}` and `{1}` are shorted by a zero-resistance path")]
    ShortedSources(String, String),
    #[error("node `{0}` carries more than one balloon")]
    DoubleBalloon(String),
    #[error("balloon on fixed node `{0}`")]
    BalloonOnFixedNode(String),
}

/// Gauge pressure. Stored in Pa; constructed and displayed in kPa.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Pressure(f64);

impl Pressure {
    pub const ZERO: Pressure = Pressure(0.0);

    pub fn from_kpa(kpa: f64) -> Self {
        Pressure(kpa * PA_PER_KPA)
    }

    pub fn from_pa(pa: f64) -> Self {
        Pressure(pa)
    }

    /// Rejects values below vacuum and non-finite values.
    pub fn try_from_kpa(kpa: f64) -> Result<Self, DomainError> {
        if !kpa.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "pressure",
                value: kpa,
            });
        }
        if kpa < -ATMOSPHERE_KPA {
            return Err(DomainError::BelowVacuum(kpa));
        }
        Ok(Self::from_kpa(kpa))
    }

    pub fn kpa(self) -> f64 {
        self.0 / PA_PER_KPA
    }

    pub fn pa(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Pressure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} kPa", self.kpa())
    }
}

/// Index of a node inside one [`PneumaticNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}
