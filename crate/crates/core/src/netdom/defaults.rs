use serde::{Deserialize, Serialize};

use super::{BalloonParams, DomainError, HysteresisThresholds, AIR_VISCOSITY};

/// Physical defaults used by the gate macros, in external units.
///
/// Compliance is in mL/kPa and conductances in mL/(s·kPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalDefaults {
    /// Pa·s
    pub viscosity: f64,
    pub p_inflate_kpa: f64,
    pub p_deflate_kpa: f64,
    pub burst_kpa: f64,
    pub tube_id_mm: f64,
    /// Supply tube through the kink.
    pub device_tube_cm: f64,
    /// Tube between a gate input and its balloon.
    pub control_tube_cm: f64,
    pub pulldown_cm: f64,
    pub rest_volume_ml: f64,
    pub compliance_ml_per_kpa: f64,
    pub open_conductance: f64,
    pub leak_conductance: f64,
}

impl Default for PhysicalDefaults {
    fn default() -> Self {
        PhysicalDefaults {
            viscosity: AIR_VISCOSITY,
            p_inflate_kpa: 85.0,
            p_deflate_kpa: 60.0,
            burst_kpa: 200.0,
            tube_id_mm: 1.0,
            device_tube_cm: 7.5,
            control_tube_cm: 7.5,
            pulldown_cm: 15.0,
            rest_volume_ml: 1.0,
            compliance_ml_per_kpa: 0.03,
            open_conductance: 1e4,
            leak_conductance: 0.0,
        }
    }
}

/// mL/kPa (and mL/(s·kPa)) to SI.
pub const SI_PER_ML_PER_KPA: f64 = 1e-9;
/// kPa·s/mL to Pa·s/m³.
pub const SI_PER_KPA_S_PER_ML: f64 = 1e9;

impl PhysicalDefaults {
    pub fn thresholds(&self) -> Result<HysteresisThresholds, DomainError> {
        HysteresisThresholds::new(self.p_inflate_kpa, self.p_deflate_kpa)
    }

    pub fn balloon(&self) -> BalloonParams {
        BalloonParams {
            rest_volume: self.rest_volume_ml * super::M3_PER_ML,
            compliance: self.compliance_ml_per_kpa * SI_PER_ML_PER_KPA,
            burst_pressure: self.burst_kpa,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        self.thresholds()?;
        self.balloon().validate()?;
        let positive = [
            ("viscosity", self.viscosity),
            ("tube inner diameter", self.tube_id_mm),
            ("open conductance", self.open_conductance),
        ];
        for (what, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(DomainError::InvalidParameter { what, value });
            }
        }
        let non_negative = [
            ("device tube length", self.device_tube_cm),
            ("control tube length", self.control_tube_cm),
            ("pull-down length", self.pulldown_cm),
            ("leak conductance", self.leak_conductance),
        ];
        for (what, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(DomainError::InvalidParameter { what, value });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let d = PhysicalDefaults::default();
        d.validate().unwrap();
        assert_eq!(d.p_inflate_kpa, 85.0);
        assert_eq!(d.burst_kpa, 200.0);
    }

    #[test]
    fn conversions() {
        let b = PhysicalDefaults::default().balloon();
        assert!((b.rest_volume - 1e-6).abs() < 1e-18);
        assert!((b.compliance - 3e-11).abs() < 1e-22);
    }
}
