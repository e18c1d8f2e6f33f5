use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{DomainError, NodeId, Pressure, PA_PER_KPA};

/// Hagen–Poiseuille resistance of a round tube, Pa·s/m³.
pub fn tube_resistance(length: f64, inner_diameter: f64, viscosity: f64) -> Result<f64, DomainError> {
    if !(length >= 0.0) || !length.is_finite() {
        return Err(DomainError::InvalidParameter {
            what: "tube length",
            value: length,
        });
    }
    if !(inner_diameter > 0.0) || !inner_diameter.is_finite() {
        return Err(DomainError::InvalidParameter {
            what: "tube inner diameter",
            value: inner_diameter,
        });
    }
    if !(viscosity > 0.0) || !viscosity.is_finite() {
        return Err(DomainError::InvalidParameter {
            what: "viscosity",
            value: viscosity,
        });
    }
    Ok(128.0 * viscosity * length / (PI * inner_diameter.powi(4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TubeGeometry {
    /// m
    pub length: f64,
    /// m
    pub inner_diameter: f64,
}

/// What a tube is for inside a gate macro. Parameter sweeps select tubes by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TubeRole {
    Supply,
    Control,
    Pulldown,
    /// Internal resistance of a non-ideal source.
    SourceInternal,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeElement {
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    /// `None` for lumped resistors that have no physical tube behind them.
    pub geometry: Option<TubeGeometry>,
    /// Pa·s/m³
    pub resistance: f64,
    pub role: TubeRole,
}

impl TubeElement {
    pub fn new(
        name: impl Into<String>,
        from: NodeId,
        to: NodeId,
        length: f64,
        inner_diameter: f64,
        viscosity: f64,
    ) -> Result<Self, DomainError> {
        let resistance = tube_resistance(length, inner_diameter, viscosity)?;
        Ok(TubeElement {
            name: name.into(),
            from,
            to,
            geometry: Some(TubeGeometry {
                length,
                inner_diameter,
            }),
            resistance,
            role: TubeRole::Other,
        })
    }

    pub fn lumped(
        name: impl Into<String>,
        from: NodeId,
        to: NodeId,
        resistance: f64,
    ) -> Result<Self, DomainError> {
        if !(resistance >= 0.0) || !resistance.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "resistance",
                value: resistance,
            });
        }
        Ok(TubeElement {
            name: name.into(),
            from,
            to,
            geometry: None,
            resistance,
            role: TubeRole::Other,
        })
    }

    pub fn with_role(mut self, role: TubeRole) -> Self {
        self.role = role;
        self
    }

    /// Rescales length (and therefore resistance) by `factor`.
    pub fn scale_length(&mut self, factor: f64) {
        if let Some(g) = self.geometry.as_mut() {
            g.length *= factor;
        }
        self.resistance *= factor;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalloonParams {
    /// Slack volume V₀, m³.
    pub rest_volume: f64,
    /// m³/Pa
    pub compliance: f64,
    /// kPa gauge
    pub burst_pressure: f64,
}

impl BalloonParams {
    pub fn validate(&self) -> Result<(), DomainError> {
        let checks = [
            ("balloon rest volume", self.rest_volume),
            ("balloon compliance", self.compliance),
            ("balloon burst pressure", self.burst_pressure),
        ];
        for (what, value) in checks {
            if !(value > 0.0) || !value.is_finite() {
                return Err(DomainError::InvalidParameter { what, value });
            }
        }
        Ok(())
    }

    /// Volume at which the membrane reaches `p`.
    pub fn volume_at(&self, p: Pressure) -> f64 {
        self.rest_volume + self.compliance * p.pa().max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalloonReading {
    pub pressure: Pressure,
    pub burst_warning: bool,
}

/// Piecewise-linear membrane law: slack below the rest volume, linear above.
pub fn balloon_pressure(volume: f64, params: &BalloonParams) -> BalloonReading {
    let pa = if volume <= params.rest_volume {
        0.0
    } else {
        (volume - params.rest_volume) / params.compliance
    };
    BalloonReading {
        pressure: Pressure::from_pa(pa),
        burst_warning: pa > params.burst_pressure * PA_PER_KPA,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HysteresisThresholds {
    /// kPa; control pressure at which the balloon kinks the supply tube.
    pub p_inflate: f64,
    /// kPa; control pressure at which the kink releases.
    pub p_deflate: f64,
}

impl HysteresisThresholds {
    pub fn new(p_inflate: f64, p_deflate: f64) -> Result<Self, DomainError> {
        let th = HysteresisThresholds {
            p_inflate,
            p_deflate,
        };
        th.validate()?;
        Ok(th)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.p_deflate > 0.0) {
            return Err(DomainError::InvalidParameter {
                what: "deflate threshold",
                value: self.p_deflate,
            });
        }
        if !(self.p_inflate > self.p_deflate) || !self.p_inflate.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "inflate threshold",
                value: self.p_inflate,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValveState {
    /// Balloon deflated, supply path passes air.
    #[default]
    Open,
    /// Balloon inflated, supply path kinked shut.
    Closed,
}

impl ValveState {
    pub fn is_open(self) -> bool {
        self == ValveState::Open
    }
}

/// Two-threshold relay. Inside the band the previous state is kept.
pub fn valve_step(state: ValveState, control: Pressure, th: &HysteresisThresholds) -> ValveState {
    let kpa = control.kpa();
    match state {
        ValveState::Open if kpa >= th.p_inflate => ValveState::Closed,
        ValveState::Closed if kpa <= th.p_deflate => ValveState::Open,
        s => s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinkValveDevice {
    pub name: String,
    pub flow_from: NodeId,
    pub flow_to: NodeId,
    /// Balloon side; its pressure is P_IN.
    pub control_node: NodeId,
    pub balloon: BalloonParams,
    pub thresholds: HysteresisThresholds,
    /// m³/(Pa·s)
    pub open_conductance: f64,
    /// m³/(Pa·s)
    pub leak_conductance: f64,
    /// State at t = 0 (and the DC search seed).
    pub state: ValveState,
}

impl KinkValveDevice {
    pub fn validate(&self) -> Result<(), DomainError> {
        self.balloon.validate()?;
        self.thresholds.validate()?;
        if !(self.leak_conductance >= 0.0) || !self.leak_conductance.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "leak conductance",
                value: self.leak_conductance,
            });
        }
        if !(self.open_conductance > self.leak_conductance) || !self.open_conductance.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "open conductance",
                value: self.open_conductance,
            });
        }
        Ok(())
    }

    pub fn conductance(&self, state: ValveState) -> f64 {
        match state {
            ValveState::Open => self.open_conductance,
            ValveState::Closed => self.leak_conductance,
        }
    }

    /// Balloon volume consistent with `state` at rest.
    pub fn initial_volume(&self) -> f64 {
        match self.state {
            ValveState::Open => self.balloon.rest_volume,
            ValveState::Closed => self
                .balloon
                .volume_at(Pressure::from_kpa(self.thresholds.p_inflate)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ElementRef<'a> {
    Tube(&'a TubeElement),
    Valve(&'a KinkValveDevice),
}

/// Volumetric flow from `p_from` to `p_to`, m³/s.
///
/// For valves, `state` overrides the device's stored state.
pub fn element_flow(
    element: ElementRef<'_>,
    p_from: Pressure,
    p_to: Pressure,
    state: Option<ValveState>,
) -> f64 {
    let dp = p_from.pa() - p_to.pa();
    match element {
        ElementRef::Tube(t) => {
            if dp == 0.0 {
                0.0
            } else {
                dp / t.resistance
            }
        }
        ElementRef::Valve(v) => v.conductance(state.unwrap_or(v.state)) * dp,
    }
}
