//! Transient simulation.
//!
//! Continuous state is the balloon volumes; every other node pressure is
//! algebraic and comes from a resistive solve at each derivative
//! evaluation. Valve transitions are discrete events located by bisection
//! on the step size and followed by an integrator restart.

use std::fmt::Write as _;

use super::dc::dc_operating_point_from;
use super::flow::{node_balance, FlowSystem};
use super::integrator::{DormandPrince, Tolerances};
use super::EngineError;
use crate::netdom::{
    balloon_pressure, valve_step, Capacitor, NodeId, NodeKind, PneumaticNetwork, Pressure,
    ValveState,
};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialCondition {
    /// Valve states and balloon volumes as stored in the network.
    #[default]
    Network,
    /// Start from the DC operating point; falls back to `Network` when
    /// the circuit is astable.
    DcOperatingPoint,
    /// Explicit valve states; closed valves start with their balloon at the
    /// inflate threshold.
    Valves(Vec<ValveState>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// s
    pub t_end: f64,
    pub tolerances: Tolerances,
    /// s
    pub max_step: f64,
    /// Width of the bracket around each valve transition, s.
    pub event_tolerance: f64,
    /// s
    pub sample_interval: f64,
    pub initial: InitialCondition,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_end: 1.0,
            tolerances: Tolerances::default(),
            max_step: 1e-3,
            event_tolerance: 1e-6,
            sample_interval: 1e-4,
            initial: InitialCondition::Network,
        }
    }
}

impl SimConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let checks = [
            ("t_end", self.t_end),
            ("rtol", self.tolerances.rtol),
            ("atol", self.tolerances.atol),
            ("max_step", self.max_step),
            ("event_tolerance", self.event_tolerance),
            ("sample_interval", self.sample_interval),
        ];
        for (name, v) in checks {
            if !(v > 0.0) || !v.is_finite() {
                return Err(EngineError::InvalidConfig(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// s
    pub time: f64,
    /// kPa, one per probe.
    pub pressures: Vec<f64>,
    /// m³, one per balloon (see [`Trace::balloon_nodes`]).
    pub volumes: Vec<f64>,
    /// Net inflow into each balloon, m³/s.
    pub inflows: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValveEvent {
    pub time: f64,
    pub valve: usize,
    pub state: ValveState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub probes: Vec<NodeId>,
    pub probe_names: Vec<String>,
    pub balloon_nodes: Vec<NodeId>,
    pub samples: Vec<Sample>,
    pub events: Vec<ValveEvent>,
    /// First time each balloon node exceeded its burst pressure.
    pub burst_warnings: Vec<(f64, NodeId)>,
}

impl Trace {
    pub fn probe_index(&self, node: NodeId) -> Option<usize> {
        self.probes.iter().position(|&p| p == node)
    }

    /// (time s, pressure kPa) pairs for one probe.
    pub fn series(&self, probe: usize) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|s| (s.time, s.pressures[probe]))
            .collect()
    }

    /// CSV with header `time_s,<node>_kPa,…`, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s");
        for name in &self.probe_names {
            let _ = write!(out, ",{name}_kPa");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{}", s.time);
            for p in &s.pressures {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }
}

struct Model<'a> {
    net: &'a PneumaticNetwork,
    caps: Vec<Capacitor>,
    /// For each capacitor, the nodes tied to it by zero-resistance tubes.
    cap_groups: Vec<Vec<usize>>,
    base: Vec<f64>,
    known: Vec<bool>,
    states: Vec<ValveState>,
    system: FlowSystem,
}

impl<'a> Model<'a> {
    fn new(net: &'a PneumaticNetwork, states: Vec<ValveState>) -> Result<Self, EngineError> {
        let caps = net.capacitors();
        let mut known: Vec<bool> = net
            .nodes()
            .iter()
            .map(|n| matches!(n.kind, NodeKind::Fixed(_)))
            .collect();
        for c in &caps {
            known[c.node.0] = true;
        }
        let base = net
            .nodes()
            .iter()
            .map(|n| match n.kind {
                NodeKind::Fixed(p) => p.pa(),
                NodeKind::Free => 0.0,
            })
            .collect();
        let system = FlowSystem::build(net, &states, &known)?;
        let cap_groups = caps
            .iter()
            .map(|c| {
                let g = system.group(c.node);
                (0..net.node_count())
                    .filter(|&i| system.group(NodeId(i)) == g)
                    .collect()
            })
            .collect();
        Ok(Model {
            net,
            caps,
            cap_groups,
            base,
            known,
            states,
            system,
        })
    }

    fn set_states(&mut self, states: Vec<ValveState>) -> Result<(), EngineError> {
        self.system = FlowSystem::build(self.net, &states, &self.known)?;
        self.states = states;
        Ok(())
    }

    fn pressures(&self, volumes: &[f64]) -> Vec<f64> {
        let mut imposed = self.base.clone();
        for (c, &v) in self.caps.iter().zip(volumes) {
            imposed[c.node.0] = balloon_pressure(v, &c.params).pressure.pa();
        }
        self.system.solve(&imposed)
    }

    fn inflows(&self, pressures: &[f64]) -> Vec<f64> {
        let (inflow, _) = node_balance(self.net, &self.states, pressures);
        self.cap_groups
            .iter()
            .map(|g| g.iter().map(|&i| inflow[i]).sum())
            .collect()
    }

    fn rhs(&self, volumes: &[f64], dv: &mut [f64]) {
        let p = self.pressures(volumes);
        dv.copy_from_slice(&self.inflows(&p));
    }

    fn next_states(&self, pressures: &[f64]) -> Vec<ValveState> {
        self.net
            .valves
            .iter()
            .zip(&self.states)
            .map(|(v, &s)| {
                valve_step(
                    s,
                    Pressure::from_pa(pressures[v.control_node.0]),
                    &v.thresholds,
                )
            })
            .collect()
    }

    fn triggered(&self, volumes: &[f64]) -> bool {
        let p = self.pressures(volumes);
        self.next_states(&p) != self.states
    }

    /// Applies transitions until the assignment is stable, recording events.
    fn settle(&mut self, time: f64, volumes: &[f64], events: &mut Vec<ValveEvent>) -> Result<(), EngineError> {
        for _ in 0..=2 * self.states.len() + 2 {
            let p = self.pressures(volumes);
            let next = self.next_states(&p);
            if next == self.states {
                return Ok(());
            }
            for (i, (&a, &b)) in self.states.iter().zip(&next).enumerate() {
                if a != b {
                    events.push(ValveEvent {
                        time,
                        valve: i,
                        state: b,
                    });
                }
            }
            self.set_states(next)?;
        }
        Err(EngineError::NonConvergence { time })
    }
}

fn initial_state(
    net: &PneumaticNetwork,
    cfg: &SimConfig,
) -> Result<(Vec<ValveState>, Vec<f64>), EngineError> {
    let caps = net.capacitors();
    let from_valves = |states: &[ValveState]| -> Vec<f64> {
        caps.iter()
            .map(|c| match c.valve {
                Some(i) => {
                    let v = &net.valves[i];
                    match states[i] {
                        ValveState::Open => v.balloon.rest_volume,
                        ValveState::Closed => v
                            .balloon
                            .volume_at(Pressure::from_kpa(v.thresholds.p_inflate)),
                    }
                }
                None => c.initial_volume,
            })
            .collect()
    };
    let stored: Vec<ValveState> = net.valves.iter().map(|v| v.state).collect();
    match &cfg.initial {
        InitialCondition::Network => Ok((stored, caps.iter().map(|c| c.initial_volume).collect())),
        InitialCondition::Valves(states) => {
            if states.len() != net.valves.len() {
                return Err(EngineError::InvalidConfig(format!(
                    "{} initial valve states for {} valves",
                    states.len(),
                    net.valves.len()
                )));
            }
            Ok((states.clone(), from_valves(states)))
        }
        InitialCondition::DcOperatingPoint => match dc_operating_point_from(net, &stored) {
            Ok(ss) => {
                let volumes = caps
                    .iter()
                    .map(|c| c.params.volume_at(ss.pressure(c.node)))
                    .collect();
                Ok((ss.valve_states, volumes))
            }
            Err(EngineError::AstableCircuit) => {
                Ok((stored, caps.iter().map(|c| c.initial_volume).collect()))
            }
            Err(e) => Err(e),
        },
    }
}

fn hermite(t0: f64, y0: &[f64], f0: &[f64], h: f64, y1: &[f64], f1: &[f64], t: f64) -> Vec<f64> {
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
        .collect()
}

struct Recorder<'m> {
    probes: &'m [NodeId],
    dt: f64,
    next_k: u64,
    t_end: f64,
    samples: Vec<Sample>,
    burst_seen: Vec<bool>,
    bursts: Vec<(f64, NodeId)>,
}

impl Recorder<'_> {
    fn next_time(&self) -> f64 {
        self.next_k as f64 * self.dt
    }

    fn record(&mut self, model: &Model<'_>, time: f64, volumes: &[f64]) {
        let p = model.pressures(volumes);
        for (i, (c, &v)) in model.caps.iter().zip(volumes).enumerate() {
            if !self.burst_seen[i] && balloon_pressure(v, &c.params).burst_warning {
                self.burst_seen[i] = true;
                self.bursts.push((time, c.node));
            }
        }
        self.samples.push(Sample {
            time,
            pressures: self.probes.iter().map(|n| p[n.0] / 1e3).collect(),
            volumes: volumes.to_vec(),
            inflows: model.inflows(&p),
        });
        self.next_k += 1;
    }

    /// Records all grid points in (t0, t0 + h].
    fn span(&mut self, model: &Model<'_>, t0: f64, y0: &[f64], f0: &[f64], h: f64, y1: &[f64], f1: &[f64]) {
        let t1 = t0 + h;
        while self.next_time() <= t1 && self.next_time() <= self.t_end {
            let t = self.next_time();
            let y = if t == t1 {
                y1.to_vec()
            } else {
                hermite(t0, y0, f0, h, y1, f1, t)
            };
            self.record(model, t, &y);
        }
    }
}

pub fn simulate(net: &PneumaticNetwork, cfg: &SimConfig) -> Result<Trace, EngineError> {
    net.validate()?;
    cfg.validate()?;
    let (states, mut y) = initial_state(net, cfg)?;
    let mut model = Model::new(net, states)?;
    let mut events = Vec::new();
    model.settle(0.0, &y, &mut events)?;

    let probes = net.probes.clone();
    let mut rec = Recorder {
        probes: &probes,
        dt: cfg.sample_interval,
        next_k: 0,
        t_end: cfg.t_end,
        samples: Vec::new(),
        burst_seen: vec![false; model.caps.len()],
        bursts: Vec::new(),
    };
    rec.record(&model, 0.0, &y);

    let dp = DormandPrince::new(cfg.tolerances, cfg.max_step);
    let n = y.len();
    let mut f = vec![0.0; n];
    model.rhs(&y, &mut f);
    let mut t = 0.0;
    let mut h = cfg.max_step.min(1e-5);

    while t < cfg.t_end {
        let remaining = cfg.t_end - t;
        let mut rhs = |_t: f64, v: &[f64], dv: &mut [f64]| model.rhs(v, dv);
        let out = dp
            .step(&mut rhs, t, &y, &f, h, remaining)
            .ok_or(EngineError::NonConvergence { time: t })?;

        if model.triggered(&out.y) {
            let (mut lo, mut hi) = (0.0, out.h);
            let mut hit = (out.y.clone(), out.f.clone());
            while hi - lo > cfg.event_tolerance {
                let mid = 0.5 * (lo + hi);
                let (ym, fm, _) = dp.try_step(&mut rhs, t, &y, &f, mid);
                if model.triggered(&ym) {
                    hi = mid;
                    hit = (ym, fm);
                } else {
                    lo = mid;
                }
            }
            let (y_hit, f_hit) = hit;
            rec.span(&model, t, &y, &f, hi, &y_hit, &f_hit);
            t = if hi == remaining { cfg.t_end } else { t + hi };
            y = y_hit;
            model.settle(t, &y, &mut events)?;
            model.rhs(&y, &mut f);
            h = out.h;
        } else {
            rec.span(&model, t, &y, &f, out.h, &out.y, &out.f);
            t = if out.h == remaining { cfg.t_end } else { t + out.h };
            y = out.y;
            f = out.f;
            h = out.h_next;
        }
    }

    let balloon_nodes = model.caps.iter().map(|c| c.node).collect();
    let (samples, bursts) = (rec.samples, rec.bursts);
    Ok(Trace {
        probe_names: probes.iter().map(|&p| net.node_name(p).to_string()).collect(),
        probes,
        balloon_nodes,
        samples,
        events,
        burst_warnings: bursts,
    })
}
