use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{
    BalloonParams, DomainError, KinkValveDevice, NodeId, Pressure, TubeElement, TubeRole,
    AIR_VISCOSITY,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeKind {
    Free,
    Fixed(Pressure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// A standalone balloon acting as a capacitance on `node`.
///
/// Every valve also carries a balloon on its control node; those are not
/// listed here (see [`PneumaticNetwork::capacitors`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Balloon {
    pub name: String,
    pub node: NodeId,
    pub params: BalloonParams,
    /// m³
    pub initial_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub name: String,
    /// The node other elements connect to.
    pub node: NodeId,
    pub pressure: Pressure,
    /// Pa·s/m³. Zero means `node` itself is held at `pressure`.
    pub internal_resistance: f64,
}

/// A capacitive node seen by the transient engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacitor {
    pub node: NodeId,
    pub params: BalloonParams,
    pub initial_volume: f64,
    /// Index into `valves` when this balloon belongs to a kink valve.
    pub valve: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PneumaticNetwork {
    nodes: Vec<Node>,
    index: BTreeMap<String, NodeId>,
    atmosphere: Option<NodeId>,
    pub tubes: Vec<TubeElement>,
    pub valves: Vec<KinkValveDevice>,
    pub balloons: Vec<Balloon>,
    pub sources: Vec<Source>,
    /// Nodes recorded by transient runs, in declaration order.
    pub probes: Vec<NodeId>,
    /// Pa·s
    pub viscosity: f64,
}

impl Default for PneumaticNetwork {
    fn default() -> Self {
        Self::new(AIR_VISCOSITY)
    }
}

impl PneumaticNetwork {
    pub fn new(viscosity: f64) -> Self {
        PneumaticNetwork {
            nodes: Vec::new(),
            index: BTreeMap::new(),
            atmosphere: None,
            tubes: Vec::new(),
            valves: Vec::new(),
            balloons: Vec::new(),
            sources: Vec::new(),
            probes: Vec::new(),
            viscosity,
        }
    }

    pub fn add_node(&mut self, name: &str, kind: NodeKind) -> Result<NodeId, DomainError> {
        if self.index.contains_key(name) {
            return Err(DomainError::DuplicateNode(name.to_string()));
        }
        if let NodeKind::Fixed(p) = kind {
            Pressure::try_from_kpa(p.kpa())?;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            name: name.to_string(),
            kind,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Looks up `name`, creating a free node on first use.
    pub fn node_or_insert(&mut self, name: &str) -> NodeId {
        match self.index.get(name) {
            Some(&id) => id,
            None => self
                .add_node(name, NodeKind::Free)
                .expect("name checked absent"),
        }
    }

    pub fn set_atmosphere(&mut self, name: &str) -> Result<NodeId, DomainError> {
        let id = self.add_node(name, NodeKind::Fixed(Pressure::ZERO))?;
        self.atmosphere = Some(id);
        Ok(id)
    }

    pub fn atmosphere(&self) -> Option<NodeId> {
        self.atmosphere
    }

    /// Adds a pressure source. With a non-zero internal resistance the
    /// ideal reservoir becomes a hidden fixed node `<name>#ideal` behind a
    /// lumped resistor, and `name` is a free node.
    pub fn add_source(
        &mut self,
        name: &str,
        pressure: Pressure,
        internal_resistance: f64,
    ) -> Result<NodeId, DomainError> {
        if !(internal_resistance >= 0.0) || !internal_resistance.is_finite() {
            return Err(DomainError::InvalidParameter {
                what: "source internal resistance",
                value: internal_resistance,
            });
        }
        let node = if internal_resistance == 0.0 {
            self.add_node(name, NodeKind::Fixed(pressure))?
        } else {
            let node = self.add_node(name, NodeKind::Free)?;
            let ideal = self.add_node(&format!("{name}#ideal"), NodeKind::Fixed(pressure))?;
            self.tubes.push(
                TubeElement::lumped(format!("{name}#rint"), ideal, node, internal_resistance)?
                    .with_role(TubeRole::SourceInternal),
            );
            node
        };
        self.sources.push(Source {
            name: name.to_string(),
            node,
            pressure,
            internal_resistance,
        });
        Ok(node)
    }

    /// Pins an existing node to a fixed pressure (used to drive logic inputs).
    pub fn fix_node(&mut self, id: NodeId, pressure: Pressure) -> Result<(), DomainError> {
        Pressure::try_from_kpa(pressure.kpa())?;
        self.nodes[id.0].kind = NodeKind::Fixed(pressure);
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn fixed_pressure(&self, id: NodeId) -> Option<Pressure> {
        match self.nodes[id.0].kind {
            NodeKind::Fixed(p) => Some(p),
            NodeKind::Free => None,
        }
    }

    /// Valve balloons first (in valve order), then standalone balloons.
    pub fn capacitors(&self) -> Vec<Capacitor> {
        let valves = self.valves.iter().enumerate().map(|(i, v)| Capacitor {
            node: v.control_node,
            params: v.balloon,
            initial_volume: v.initial_volume(),
            valve: Some(i),
        });
        let standalone = self.balloons.iter().map(|b| Capacitor {
            node: b.node,
            params: b.params,
            initial_volume: b.initial_volume,
            valve: None,
        });
        valves.chain(standalone).collect()
    }

    pub fn balloon_count(&self) -> usize {
        self.valves.len() + self.balloons.len()
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !self
            .nodes
            .iter()
            .any(|n| matches!(n.kind, NodeKind::Fixed(_)))
        {
            return Err(DomainError::NoFixedNode);
        }
        match self.atmosphere {
            Some(id) if self.fixed_pressure(id) == Some(Pressure::ZERO) => {}
            _ => return Err(DomainError::NoAtmosphere),
        }
        for t in &self.tubes {
            if !(t.resistance >= 0.0) || !t.resistance.is_finite() {
                return Err(DomainError::InvalidParameter {
                    what: "tube resistance",
                    value: t.resistance,
                });
            }
        }
        for v in &self.valves {
            v.validate()?;
        }
        let mut seen = vec![false; self.nodes.len()];
        for c in self.capacitors() {
            c.params.validate()?;
            if c.initial_volume < 0.0 {
                return Err(DomainError::InvalidParameter {
                    what: "initial balloon volume",
                    value: c.initial_volume,
                });
            }
            let name = self.node_name(c.node).to_string();
            if seen[c.node.0] {
                return Err(DomainError::DoubleBalloon(name));
            }
            if self.fixed_pressure(c.node).is_some() {
                return Err(DomainError::BalloonOnFixedNode(name));
            }
            seen[c.node.0] = true;
        }
        self.check_shorted_sources()
    }

    fn check_shorted_sources(&self) -> Result<(), DomainError> {
        let mut uf = UnionFind::new(self.nodes.len());
        for t in self.tubes.iter().filter(|t| t.resistance == 0.0) {
            uf.union(t.from.0, t.to.0);
        }
        let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n.kind, NodeKind::Fixed(_)) {
                let root = uf.find(i);
                if let Some(&j) = owner.get(&root) {
                    return Err(DomainError::ShortedSources(
                        self.nodes[j].name.clone(),
                        n.name.clone(),
                    ));
                }
                owner.insert(root, i);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index wins so roots are deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
