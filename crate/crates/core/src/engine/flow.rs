//! Algebraic resistive solve: given the pressures of known nodes and the
//! valve states, find every other node pressure from flow balance.

use super::sparse::{SparseFactor, SymmetricBuilder};
use super::EngineError;
use crate::netdom::{NodeId, PneumaticNetwork, UnionFind, ValveState};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    /// Pressure supplied by the caller for this node.
    Known(usize),
    Row(usize),
    /// No conductive path to any known node; reported as 0 Pa.
    Floating,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowSystem {
    rep: Vec<usize>,
    slot: Vec<Slot>,
    factor: Option<SparseFactor>,
    rhs_terms: Vec<(usize, usize, f64)>,
    rows: usize,
}

impl FlowSystem {
    /// `known[i]` marks nodes whose pressure is imposed (fixed nodes, and
    /// balloon nodes during transients).
    pub(crate) fn build(
        net: &PneumaticNetwork,
        states: &[ValveState],
        known: &[bool],
    ) -> Result<Self, EngineError> {
        let n = net.node_count();
        let mut uf = UnionFind::new(n);
        for t in net.tubes.iter().filter(|t| t.resistance == 0.0) {
            uf.union(t.from.0, t.to.0);
        }
        let rep: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();

        // one imposed pressure per shorted group
        let mut group_known: Vec<Option<usize>> = vec![None; n];
        for i in (0..n).filter(|&i| known[i]) {
            match group_known[rep[i]] {
                Some(_) => {
                    return Err(EngineError::Singular(format!(
                        "node `{}` is shorted to another imposed-pressure node",
                        net.node_name(NodeId(i))
                    )))
                }
                None => group_known[rep[i]] = Some(i),
            }
        }

        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for t in net.tubes.iter().filter(|t| t.resistance > 0.0) {
            edges.push((rep[t.from.0], rep[t.to.0], 1.0 / t.resistance));
        }
        for (v, &s) in net.valves.iter().zip(states) {
            let g = v.conductance(s);
            if g > 0.0 {
                edges.push((rep[v.flow_from.0], rep[v.flow_to.0], g));
            }
        }
        edges.retain(|&(a, b, _)| a != b);

        // groups reachable from a known group are solvable; the rest float
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b, _) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut anchored = vec![false; n];
        let mut stack: Vec<usize> = (0..n)
            .filter(|&g| rep[g] == g && group_known[g].is_some())
            .collect();
        for &g in &stack {
            anchored[g] = true;
        }
        while let Some(g) = stack.pop() {
            for &h in &adj[g] {
                if !anchored[h] {
                    anchored[h] = true;
                    stack.push(h);
                }
            }
        }

        let mut group_slot: Vec<Slot> = vec![Slot::Floating; n];
        let mut rows = 0;
        for g in (0..n).filter(|&g| rep[g] == g) {
            group_slot[g] = match group_known[g] {
                Some(k) => Slot::Known(k),
                None if anchored[g] => {
                    rows += 1;
                    Slot::Row(rows - 1)
                }
                None => Slot::Floating,
            };
        }

        let mut builder = SymmetricBuilder::new(rows);
        let mut rhs_terms = Vec::new();
        for &(a, b, g) in &edges {
            match (group_slot[a], group_slot[b]) {
                (Slot::Row(i), Slot::Row(j)) => {
                    builder.add_diag(i, g);
                    builder.add_diag(j, g);
                    builder.add_off(i, j, -g);
                }
                (Slot::Row(i), Slot::Known(k)) | (Slot::Known(k), Slot::Row(i)) => {
                    builder.add_diag(i, g);
                    rhs_terms.push((i, k, g));
                }
                _ => {}
            }
        }
        let factor = if rows > 0 {
            Some(builder.factor().map_err(|_| {
                EngineError::Singular("flow-balance matrix is not positive definite".into())
            })?)
        } else {
            None
        };
        let slot = (0..n).map(|i| group_slot[rep[i]]).collect();
        Ok(FlowSystem {
            rep,
            slot,
            factor,
            rhs_terms,
            rows,
        })
    }

    /// Node pressures in Pa. `imposed` is indexed by node; only entries of
    /// known nodes are read.
    pub(crate) fn solve(&self, imposed: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.rows];
        for &(i, k, g) in &self.rhs_terms {
            b[i] += g * imposed[k];
        }
        let x = match &self.factor {
            Some(f) => f.solve(&b),
            None => Vec::new(),
        };
        self.slot
            .iter()
            .map(|s| match *s {
                Slot::Known(k) => imposed[k],
                Slot::Row(r) => x[r],
                Slot::Floating => 0.0,
            })
            .collect()
    }

    /// True when the node's pressure comes from the solve (not imposed, not floating).
    pub(crate) fn is_solved(&self, node: NodeId) -> bool {
        matches!(self.slot[node.0], Slot::Row(_))
    }

    /// Representative of the zero-resistance group containing `node`.
    pub(crate) fn group(&self, node: NodeId) -> usize {
        self.rep[node.0]
    }

    pub(crate) fn floating_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slot
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Slot::Floating)
            .map(|(i, _)| NodeId(i))
    }
}

/// Net volumetric inflow into every node (m³/s) and the largest absolute
/// branch flow.
pub(crate) fn node_balance(
    net: &PneumaticNetwork,
    states: &[ValveState],
    pressures: &[f64],
) -> (Vec<f64>, f64) {
    let mut inflow = vec![0.0; net.node_count()];
    let mut max_branch: f64 = 0.0;
    let mut add = |from: NodeId, to: NodeId, q: f64| {
        inflow[from.0] -= q;
        inflow[to.0] += q;
        max_branch = max_branch.max(q.abs());
    };
    for t in net.tubes.iter().filter(|t| t.resistance > 0.0) {
        add(t.from, t.to, (pressures[t.from.0] - pressures[t.to.0]) / t.resistance);
    }
    for (v, &s) in net.valves.iter().zip(states) {
        add(
            v.flow_from,
            v.flow_to,
            v.conductance(s) * (pressures[v.flow_from.0] - pressures[v.flow_to.0]),
        );
    }
    (inflow, max_branch)
}
