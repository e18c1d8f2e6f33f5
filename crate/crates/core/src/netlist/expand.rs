use std::collections::BTreeSet;

use super::ast::{Circuit, GateKind, Kind, Statement};
use super::ExpandError;
use crate::netdom::{
    Balloon, BalloonParams, DomainError, HysteresisThresholds, KinkValveDevice, NodeId,
    PhysicalDefaults, PneumaticNetwork, Pressure, TubeElement, TubeRole, ValveState, M3_PER_ML,
    SI_PER_KPA_S_PER_ML, SI_PER_ML_PER_KPA,
};

const M_PER_CM: f64 = 1e-2;
const M_PER_MM: f64 = 1e-3;

/// Device parameters after applying per-statement overrides, in SI.
struct Device {
    device_len: f64,
    control_len: f64,
    pulldown_len: f64,
    drain_len: f64,
    sense: Option<f64>,
    inner_diameter: f64,
    balloon: BalloonParams,
    thresholds: HysteresisThresholds,
    open_conductance: f64,
    leak_conductance: f64,
    state: ValveState,
}

impl Device {
    fn resolve(d: &PhysicalDefaults, s: &Statement) -> Self {
        let num = |key: &str, default: f64| s.number(key).unwrap_or(default);
        Device {
            device_len: num("device_len", d.device_tube_cm) * M_PER_CM,
            control_len: num("control_len", d.control_tube_cm) * M_PER_CM,
            pulldown_len: num("pulldown_len", d.pulldown_cm) * M_PER_CM,
            drain_len: num("drain_len", d.device_tube_cm) * M_PER_CM,
            sense: s.number("sense").map(|v| v * M_PER_CM),
            inner_diameter: num("id", d.tube_id_mm) * M_PER_MM,
            balloon: BalloonParams {
                rest_volume: num("rest", d.rest_volume_ml) * M3_PER_ML,
                compliance: num("compliance", d.compliance_ml_per_kpa) * SI_PER_ML_PER_KPA,
                burst_pressure: num("burst", d.burst_kpa),
            },
            thresholds: HysteresisThresholds {
                p_inflate: num("inflate", d.p_inflate_kpa),
                p_deflate: num("deflate", d.p_deflate_kpa),
            },
            open_conductance: num("gopen", d.open_conductance) * SI_PER_ML_PER_KPA,
            leak_conductance: num("gleak", d.leak_conductance) * SI_PER_ML_PER_KPA,
            state: match s.name("init") {
                Some("closed") => ValveState::Closed,
                _ => ValveState::Open,
            },
        }
    }
}

struct Builder<'a> {
    net: PneumaticNetwork,
    defaults: &'a PhysicalDefaults,
    atm: NodeId,
    sources: BTreeSet<String>,
    line: usize,
    id: String,
}

impl Builder<'_> {
    fn domain(&self, source: DomainError) -> ExpandError {
        ExpandError::Domain {
            line: self.line,
            id: self.id.clone(),
            source,
        }
    }

    fn node(&mut self, name: &str) -> NodeId {
        self.net.node_or_insert(name)
    }

    fn tube(
        &mut self,
        name: String,
        from: NodeId,
        to: NodeId,
        length: f64,
        inner_diameter: f64,
        role: TubeRole,
    ) -> Result<(), ExpandError> {
        let t = TubeElement::new(name, from, to, length, inner_diameter, self.net.viscosity)
            .map_err(|e| self.domain(e))?
            .with_role(role);
        self.net.tubes.push(t);
        Ok(())
    }

    fn valve(
        &mut self,
        name: String,
        from: NodeId,
        to: NodeId,
        ctrl: NodeId,
        dev: &Device,
    ) -> Result<(), ExpandError> {
        let v = KinkValveDevice {
            name,
            flow_from: from,
            flow_to: to,
            control_node: ctrl,
            balloon: dev.balloon,
            thresholds: dev.thresholds,
            open_conductance: dev.open_conductance,
            leak_conductance: dev.leak_conductance,
            state: dev.state,
        };
        v.validate().map_err(|e| self.domain(e))?;
        self.net.valves.push(v);
        Ok(())
    }

    /// Balloon-side input: a control tube from `input` to a fresh control node.
    fn control(&mut self, prefix: &str, suffix: &str, input: NodeId, dev: &Device) -> Result<NodeId, ExpandError> {
        let ctrl = self.node(&format!("{prefix}.ctrl{suffix}"));
        self.tube(
            format!("{prefix}.control{suffix}"),
            input,
            ctrl,
            dev.control_len,
            dev.inner_diameter,
            TubeRole::Control,
        )?;
        Ok(ctrl)
    }

    /// Pull-down from `out` to the atmosphere, optionally split at a sense
    /// port `sense` metres from the atmosphere end.
    fn pulldown(&mut self, name: String, out: NodeId, dev: &Device, sense: Option<f64>) -> Result<(), ExpandError> {
        let len = dev.pulldown_len;
        match sense {
            None => self.tube(name, out, self.atm, len, dev.inner_diameter, TubeRole::Pulldown),
            Some(s) => {
                if !(s >= 0.0 && s <= len) {
                    return Err(self.domain(DomainError::InvalidParameter {
                        what: "sense port position",
                        value: s / M_PER_CM,
                    }));
                }
                let port_name = format!("{}.sense", self.net.node_name(out));
                let port = self.node(&port_name);
                self.tube(name.clone(), out, port, len - s, dev.inner_diameter, TubeRole::Pulldown)?;
                self.tube(format!("{name}.atm"), port, self.atm, s, dev.inner_diameter, TubeRole::Pulldown)
            }
        }
    }

    fn not_gate(
        &mut self,
        prefix: &str,
        input: NodeId,
        out: NodeId,
        supply: NodeId,
        dev: &Device,
        sense: Option<f64>,
        own_pulldown: bool,
    ) -> Result<(), ExpandError> {
        let mid = self.node(&format!("{prefix}.mid"));
        self.tube(format!("{prefix}.supply"), supply, mid, dev.device_len, dev.inner_diameter, TubeRole::Supply)?;
        let ctrl = self.control(prefix, "", input, dev)?;
        self.valve(format!("{prefix}.valve"), mid, out, ctrl, dev)?;
        if own_pulldown {
            self.pulldown(format!("{prefix}.pulldown"), out, dev, sense)?;
        }
        Ok(())
    }

    fn nor_gate(&mut self, prefix: &str, a: NodeId, b: NodeId, out: NodeId, supply: NodeId, dev: &Device, sense: Option<f64>) -> Result<(), ExpandError> {
        let mid1 = self.node(&format!("{prefix}.mid1"));
        let mid2 = self.node(&format!("{prefix}.mid2"));
        self.tube(format!("{prefix}.supply"), supply, mid1, dev.device_len, dev.inner_diameter, TubeRole::Supply)?;
        let c1 = self.control(prefix, "1", a, dev)?;
        let c2 = self.control(prefix, "2", b, dev)?;
        self.valve(format!("{prefix}.valve1"), mid1, mid2, c1, dev)?;
        self.valve(format!("{prefix}.valve2"), mid2, out, c2, dev)?;
        self.pulldown(format!("{prefix}.pulldown"), out, dev, sense)
    }

    fn nand_gate(&mut self, prefix: &str, a: NodeId, b: NodeId, out: NodeId, supply: NodeId, dev: &Device, sense: Option<f64>) -> Result<(), ExpandError> {
        for (k, input) in [("1", a), ("2", b)] {
            let mid = self.node(&format!("{prefix}.mid{k}"));
            self.tube(format!("{prefix}.supply{k}"), supply, mid, dev.device_len, dev.inner_diameter, TubeRole::Supply)?;
            let c = self.control(prefix, k, input, dev)?;
            self.valve(format!("{prefix}.valve{k}"), mid, out, c, dev)?;
        }
        self.pulldown(format!("{prefix}.pulldown"), out, dev, sense)
    }

    fn supply(&mut self, s: &Statement) -> Result<NodeId, ExpandError> {
        match s.name("supply") {
            Some(name) if self.sources.contains(name) => Ok(self.net.node_id(name).expect("declared source")),
            other => Err(ExpandError::SupplyMissing {
                line: s.line,
                id: s.id.clone(),
                supply: other.map(str::to_string),
            }),
        }
    }

    fn required<'s>(&self, s: &'s Statement, key: &str) -> Result<&'s str, ExpandError> {
        s.name(key).ok_or_else(|| ExpandError::UnboundPort {
            line: s.line,
            id: s.id.clone(),
            port: key.to_string(),
        })
    }

    fn gate(&mut self, g: GateKind, s: &Statement) -> Result<(), ExpandError> {
        let inputs = s.list("in").ok_or_else(|| ExpandError::UnboundPort {
            line: s.line,
            id: s.id.clone(),
            port: "in".into(),
        })?;
        if inputs.len() != g.arity() {
            return Err(ExpandError::Arity {
                line: s.line,
                id: s.id.clone(),
                key: "in".into(),
                expected: g.arity(),
                found: inputs.len(),
            });
        }
        let out_name = self.required(s, "out")?;
        let supply = self.supply(s)?;
        let dev = Device::resolve(self.defaults, s);
        let ins: Vec<NodeId> = inputs.iter().map(|n| self.node(n)).collect();
        let out = self.node(out_name);
        let p = s.id.as_str();
        match g {
            GateKind::Not => self.not_gate(p, ins[0], out, supply, &dev, dev.sense, true),
            GateKind::Nor => self.nor_gate(p, ins[0], ins[1], out, supply, &dev, dev.sense),
            GateKind::Nand => self.nand_gate(p, ins[0], ins[1], out, supply, &dev, dev.sense),
            GateKind::And | GateKind::Or => {
                let inner = self.node(&format!("{p}.n"));
                if g == GateKind::And {
                    self.nand_gate(&format!("{p}.nand"), ins[0], ins[1], inner, supply, &dev, None)?;
                } else {
                    self.nor_gate(&format!("{p}.nor"), ins[0], ins[1], inner, supply, &dev, None)?;
                }
                self.not_gate(&format!("{p}.not"), inner, out, supply, &dev, dev.sense, true)
            }
        }
    }

    fn ring(&mut self, s: &Statement) -> Result<(), ExpandError> {
        let n = s.number("n").ok_or_else(|| ExpandError::UnboundPort {
            line: s.line,
            id: s.id.clone(),
            port: "n".into(),
        })? as u64;
        if n % 2 == 0 {
            return Err(ExpandError::EvenRing {
                line: s.line,
                id: s.id.clone(),
                n,
            });
        }
        if n < 3 {
            return Err(ExpandError::RingTooShort {
                line: s.line,
                id: s.id.clone(),
                n,
            });
        }
        let n = n as usize;
        let supply = self.supply(s)?;
        let taps: Vec<String> = match s.list("taps") {
            Some(t) if t.len() != n => {
                return Err(ExpandError::Arity {
                    line: s.line,
                    id: s.id.clone(),
                    key: "taps".into(),
                    expected: n,
                    found: t.len(),
                })
            }
            Some(t) => t.to_vec(),
            None => (0..n).map(|i| format!("{}.q{i}", s.id)).collect(),
        };
        let central = s.name("pulldown") == Some("central");
        let mut dev = Device::resolve(self.defaults, s);
        let outs: Vec<NodeId> = taps.iter().map(|t| self.node(t)).collect();
        for i in 0..n {
            // gate 0 starts actuated so the ring leaves the symmetric state
            dev.state = if i == 0 { ValveState::Closed } else { ValveState::Open };
            let prefix = format!("{}.g{i}", s.id);
            self.not_gate(&prefix, outs[(i + n - 1) % n], outs[i], supply, &dev, dev.sense, !central)?;
        }
        if central {
            let hub = self.node(&format!("{}.hub", s.id));
            for (i, &out) in outs.iter().enumerate() {
                self.tube(format!("{}.g{i}.drain", s.id), out, hub, dev.drain_len, dev.inner_diameter, TubeRole::Pulldown)?;
            }
            self.pulldown(format!("{}.pulldown", s.id), hub, &dev, dev.sense)?;
        }
        Ok(())
    }

    fn primitive(&mut self, s: &Statement) -> Result<(), ExpandError> {
        let d = self.defaults;
        match s.kind {
            Kind::Tube => {
                let from = self.required(s, "from")?;
                let to = self.required(s, "to")?;
                let (from, to) = (self.node(from), self.node(to));
                if let Some(r) = s.number("r") {
                    let t = TubeElement::lumped(s.id.clone(), from, to, r * SI_PER_KPA_S_PER_ML)
                        .map_err(|e| self.domain(e))?;
                    self.net.tubes.push(t);
                    Ok(())
                } else {
                    let length = s.number("length").ok_or_else(|| ExpandError::UnboundPort {
                        line: s.line,
                        id: s.id.clone(),
                        port: "length".into(),
                    })?;
                    let id = s.number("id").unwrap_or(d.tube_id_mm);
                    self.tube(s.id.clone(), from, to, length * M_PER_CM, id * M_PER_MM, TubeRole::Other)
                }
            }
            Kind::Balloon => {
                let node = self.required(s, "node")?;
                let node = self.node(node);
                let dev = Device::resolve(d, s);
                dev.balloon.validate().map_err(|e| self.domain(e))?;
                let initial_volume = s
                    .number("volume")
                    .map(|v| v * M3_PER_ML)
                    .unwrap_or(dev.balloon.rest_volume);
                self.net.balloons.push(Balloon {
                    name: s.id.clone(),
                    node,
                    params: dev.balloon,
                    initial_volume,
                });
                Ok(())
            }
            Kind::Valve => {
                let from = self.required(s, "from")?;
                let to = self.required(s, "to")?;
                let ctrl = self.required(s, "ctrl")?;
                let (from, to, ctrl) = (self.node(from), self.node(to), self.node(ctrl));
                let dev = Device::resolve(d, s);
                self.valve(s.id.clone(), from, to, ctrl, &dev)
            }
            Kind::Gate(g) => self.gate(g, s),
            Kind::Ring => self.ring(s),
            Kind::Source | Kind::Atm | Kind::Probe => Ok(()),
        }
    }
}

pub fn expand(circuit: &Circuit) -> Result<PneumaticNetwork, ExpandError> {
    expand_with(circuit, &PhysicalDefaults::default())
}

/// Builds the network. Sources and the atmosphere are created first so that
/// statements may reference them in any order; a circuit without an `atm`
/// statement gets one named `ATM`. Gate internals are namespaced under the
/// gate id (`g1.mid`, `g1.ctrl`, …).
pub fn expand_with(circuit: &Circuit, defaults: &PhysicalDefaults) -> Result<PneumaticNetwork, ExpandError> {
    let mut net = PneumaticNetwork::new(defaults.viscosity);
    let mut sources = BTreeSet::new();
    let mut atm = None;
    fn wrap(s: &Statement) -> impl Fn(DomainError) -> ExpandError + '_ {
        move |source| ExpandError::Domain {
            line: s.line,
            id: s.id.clone(),
            source,
        }
    }
    for s in &circuit.statements {
        match s.kind {
            Kind::Atm => {
                if atm.is_some() {
                    return Err(ExpandError::MultipleAtmospheres {
                        line: s.line,
                        id: s.id.clone(),
                    });
                }
                atm = Some(net.set_atmosphere(&s.id).map_err(wrap(s))?);
            }
            Kind::Source => {
                let p = s.number("pressure").ok_or_else(|| ExpandError::UnboundPort {
                    line: s.line,
                    id: s.id.clone(),
                    port: "pressure".into(),
                })?;
                let p = Pressure::try_from_kpa(p).map_err(wrap(s))?;
                let rint = s.number("rint").unwrap_or(0.0) * SI_PER_KPA_S_PER_ML;
                net.add_source(&s.id, p, rint).map_err(wrap(s))?;
                sources.insert(s.id.clone());
            }
            _ => {}
        }
    }
    let atm = match atm {
        Some(a) => a,
        None => net.set_atmosphere("ATM").map_err(|source| ExpandError::Domain {
            line: 0,
            id: "ATM".into(),
            source,
        })?,
    };

    let mut b = Builder {
        net,
        defaults,
        atm,
        sources,
        line: 0,
        id: String::new(),
    };
    for s in &circuit.statements {
        b.line = s.line;
        b.id = s.id.clone();
        b.primitive(s)?;
    }
    for s in circuit.statements.iter().filter(|s| s.kind == Kind::Probe) {
        let node = b.net.node_id(&s.id).ok_or_else(|| ExpandError::UnboundPort {
            line: s.line,
            id: s.id.clone(),
            port: "node".into(),
        })?;
        b.net.probes.push(node);
    }
    b.net.validate().map_err(|source| ExpandError::Domain {
        line: 0,
        id: String::new(),
        source,
    })?;
    Ok(b.net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse;

    fn net(text: &str) -> PneumaticNetwork {
        expand(&parse(text).unwrap()).unwrap()
    }

    fn err(text: &str) -> ExpandError {
        expand(&parse(text).unwrap()).unwrap_err()
    }

    #[test]
    fn not_gate_counts() {
        let n = net("source SUP pressure=145kPa\ngate NOT g1 in=a out=q supply=SUP");
        assert_eq!(n.valves.len(), 1);
        assert_eq!(n.tubes.len(), 3);
        assert_eq!(n.balloon_count(), 1);
        let roles: Vec<TubeRole> = n.tubes.iter().map(|t| t.role).collect();
        assert_eq!(roles, [TubeRole::Supply, TubeRole::Control, TubeRole::Pulldown]);
        let pd = &n.tubes[2];
        assert_eq!(n.node_name(pd.from), "q");
        assert_eq!(Some(pd.to), n.atmosphere());
        assert!((pd.geometry.unwrap().length - 0.15).abs() < 1e-15);
        assert!((n.tubes[0].geometry.unwrap().length - 0.075).abs() < 1e-15);
    }

    #[test]
    fn nor_is_series_with_one_pulldown() {
        let n = net("source S pressure=145kPa\ngate NOR g in=a,b out=q supply=S");
        assert_eq!(n.valves.len(), 2);
        assert_eq!(n.valves[0].flow_to, n.valves[1].flow_from);
        assert_eq!(n.tubes.iter().filter(|t| t.role == TubeRole::Pulldown).count(), 1);
    }

    #[test]
    fn nand_is_parallel_with_one_pulldown() {
        let n = net("source S pressure=145kPa\ngate NAND g in=a,b out=q supply=S");
        assert_eq!(n.valves.len(), 2);
        assert_eq!(n.valves[0].flow_to, n.valves[1].flow_to);
        assert_ne!(n.valves[0].flow_from, n.valves[1].flow_from);
        assert_eq!(n.tubes.iter().filter(|t| t.role == TubeRole::Pulldown).count(), 1);
    }

    #[test]
    fn and_or_add_an_inverter() {
        for g in ["AND", "OR"] {
            let n = net(&format!("source S pressure=145kPa\ngate {g} g in=a,b out=q supply=S"));
            assert_eq!(n.valves.len(), 3);
            assert_eq!(n.tubes.iter().filter(|t| t.role == TubeRole::Pulldown).count(), 2);
        }
    }

    #[test]
    fn ring_structure() {
        let n = net("source S pressure=145kPa\nring r n=3 supply=S taps=a,b,c");
        assert_eq!(n.valves.len(), 3);
        assert_eq!(n.valves[0].state, ValveState::Closed);
        assert_eq!(n.valves[1].state, ValveState::Open);
        // gate i is fed by tap i-1
        let a = n.node_id("a").unwrap();
        let ctrl0 = n.valves[0].control_node;
        let feed = n.tubes.iter().find(|t| t.to == ctrl0).unwrap();
        assert_eq!(feed.from, n.node_id("c").unwrap());
        assert_eq!(n.valves[0].flow_to, a);

        let c = net("source S pressure=145kPa\nring r n=5 supply=S pulldown=central");
        assert_eq!(c.valves.len(), 5);
        let pd: Vec<_> = c.tubes.iter().filter(|t| t.role == TubeRole::Pulldown).collect();
        assert_eq!(pd.len(), 6);
        assert!(c.node_id("r.q4").is_some());
    }

    #[test]
    fn sense_port_splits_pulldown() {
        let n = net("source S pressure=145kPa\ngate NOT g in=a out=q supply=S sense=5cm");
        let port = n.node_id("q.sense").unwrap();
        let pd: Vec<_> = n.tubes.iter().filter(|t| t.role == TubeRole::Pulldown).collect();
        assert_eq!(pd.len(), 2);
        assert!((pd[0].geometry.unwrap().length - 0.10).abs() < 1e-12);
        assert_eq!(pd[0].to, port);
        assert!((pd[1].geometry.unwrap().length - 0.05).abs() < 1e-12);
        assert!(matches!(
            err("source S pressure=145kPa\ngate NOT g in=a out=q supply=S sense=20cm"),
            ExpandError::Domain { line: 2, .. }
        ));
    }

    #[test]
    fn even_and_short_rings() {
        assert!(matches!(
            err("source S pressure=1kPa\nring r n=4 supply=S"),
            ExpandError::EvenRing { n: 4, line: 2, .. }
        ));
        assert!(matches!(
            err("source S pressure=1kPa\nring r n=1 supply=S"),
            ExpandError::RingTooShort { .. }
        ));
        assert!(matches!(
            err("source S pressure=1kPa\nring r n=3 supply=S taps=a,b"),
            ExpandError::Arity { expected: 3, found: 2, .. }
        ));
    }

    #[test]
    fn unbound_and_supply_errors() {
        assert!(matches!(
            err("source S pressure=1kPa\ngate NOT g in=a supply=S"),
            ExpandError::UnboundPort { ref port, .. } if port == "out"
        ));
        assert!(matches!(
            err("gate NOT g in=a out=q"),
            ExpandError::SupplyMissing { supply: None, .. }
        ));
        assert!(matches!(
            err("gate NOT g in=a out=q supply=P"),
            ExpandError::SupplyMissing { supply: Some(_), .. }
        ));
        assert!(matches!(
            err("source S pressure=1kPa\ngate NOR g in=a out=q supply=S"),
            ExpandError::Arity { .. }
        ));
        assert!(matches!(
            err("source S pressure=1kPa\nprobe nowhere"),
            ExpandError::UnboundPort { .. }
        ));
        assert!(matches!(
            err("source S pressure=1kPa\natm A\natm B"),
            ExpandError::MultipleAtmospheres { line: 3, .. }
        ));
    }

    #[test]
    fn deterministic_naming() {
        let text = "source S pressure=145kPa\ngate AND g in=a,b out=q supply=S\nring r n=3 supply=S";
        let a = net(text);
        let b = net(text);
        assert_eq!(a, b);
        let names: Vec<&str> = a.nodes().iter().map(|n| n.name.as_str()).collect();
        assert!(names.contains(&"g.nand.mid1") && names.contains(&"r.g2.ctrl"));
    }

    #[test]
    fn primitives_and_sources() {
        let n = net(
            "source S pressure=145kPa rint=0.1\natm AIR\ntube t from=S to=x r=0.5\n\
             balloon b node=x compliance=0.05 volume=2mL\nvalve v from=x to=AIR ctrl=c init=closed\nprobe x",
        );
        assert_eq!(n.atmosphere(), n.node_id("AIR"));
        assert!(n.node_id("S#ideal").is_some());
        let t = n.tubes.iter().find(|t| t.name == "t").unwrap();
        assert!((t.resistance - 5e8).abs() < 1e-3);
        assert!((n.balloons[0].initial_volume - 2e-6).abs() < 1e-18);
        assert!((n.balloons[0].params.compliance - 5e-11).abs() < 1e-24);
        assert_eq!(n.valves[0].state, ValveState::Closed);
        assert_eq!(n.probes, vec![n.node_id("x").unwrap()]);
    }
}
