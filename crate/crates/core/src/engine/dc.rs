use std::collections::HashSet;

use super::flow::{node_balance, FlowSystem};
use super::{EngineError, MAX_ENUMERATED_VALVES};
use crate::netdom::{valve_step, NodeId, NodeKind, PneumaticNetwork, Pressure, ValveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcMethod {
    FixedPointIteration { iterations: usize },
    Enumeration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub valve_states: Vec<ValveState>,
    /// Indexed by node.
    pub node_pressures: Vec<Pressure>,
    pub converged: bool,
    pub method: DcMethod,
    /// Every self-consistent assignment, filled when enumeration ran.
    pub fixed_points: Vec<Vec<ValveState>>,
    /// Nodes with no conductive path to a fixed node (reported at 0 kPa).
    pub floating: Vec<NodeId>,
    /// Balloon nodes whose pressure exceeds the burst limit.
    pub burst_warnings: Vec<NodeId>,
    /// max |Σ flow| over solved nodes, scaled by the largest pressure times
    /// the largest branch conductance.
    pub relative_residual: f64,
}

impl SteadyState {
    pub fn pressure(&self, node: NodeId) -> Pressure {
        self.node_pressures[node.0]
    }
}

struct Solved {
    pressures: Vec<f64>,
    system: FlowSystem,
}

fn fixed_mask(net: &PneumaticNetwork) -> Vec<bool> {
    net.nodes()
        .iter()
        .map(|n| matches!(n.kind, NodeKind::Fixed(_)))
        .collect()
}

fn imposed(net: &PneumaticNetwork) -> Vec<f64> {
    net.nodes()
        .iter()
        .map(|n| match n.kind {
            NodeKind::Fixed(p) => p.pa(),
            NodeKind::Free => 0.0,
        })
        .collect()
}

fn solve(net: &PneumaticNetwork, states: &[ValveState]) -> Result<Solved, EngineError> {
    let system = FlowSystem::build(net, states, &fixed_mask(net))?;
    let pressures = system.solve(&imposed(net));
    if pressures.iter().any(|p| !p.is_finite()) {
        return Err(EngineError::Singular("non-finite node pressure".into()));
    }
    Ok(Solved { pressures, system })
}

fn step_all(net: &PneumaticNetwork, states: &[ValveState], pressures: &[f64]) -> Vec<ValveState> {
    net.valves
        .iter()
        .zip(states)
        .map(|(v, &s)| {
            valve_step(
                s,
                Pressure::from_pa(pressures[v.control_node.0]),
                &v.thresholds,
            )
        })
        .collect()
}

/// Node pressures for a prescribed valve assignment, without any
/// self-consistency requirement.
pub fn solve_with_states(
    net: &PneumaticNetwork,
    states: &[ValveState],
) -> Result<Vec<Pressure>, EngineError> {
    net.validate()?;
    if states.len() != net.valves.len() {
        return Err(EngineError::InvalidConfig(format!(
            "{} valve states given for {} valves",
            states.len(),
            net.valves.len()
        )));
    }
    Ok(solve(net, states)?
        .pressures
        .into_iter()
        .map(Pressure::from_pa)
        .collect())
}

/// DC operating point seeded from each valve's stored state.
pub fn dc_operating_point(net: &PneumaticNetwork) -> Result<SteadyState, EngineError> {
    let seed: Vec<ValveState> = net.valves.iter().map(|v| v.state).collect();
    dc_operating_point_from(net, &seed)
}

pub fn dc_operating_point_from(
    net: &PneumaticNetwork,
    seed: &[ValveState],
) -> Result<SteadyState, EngineError> {
    net.validate()?;
    if seed.len() != net.valves.len() {
        return Err(EngineError::InvalidConfig(format!(
            "{} seed states given for {} valves",
            seed.len(),
            net.valves.len()
        )));
    }

    // synchronous re-evaluation, as the physical circuit would settle
    let mut states = seed.to_vec();
    let mut visited: HashSet<Vec<ValveState>> = HashSet::new();
    let limit = 2 * net.valves.len() + 4;
    for iteration in 0..=limit {
        let solved = solve(net, &states)?;
        let next = step_all(net, &states, &solved.pressures);
        if next == states {
            return Ok(finish(
                net,
                states,
                solved,
                DcMethod::FixedPointIteration {
                    iterations: iteration,
                },
                Vec::new(),
            ));
        }
        if !visited.insert(states.clone()) {
            break;
        }
        states = next;
    }

    let count = net.valves.len();
    if count > MAX_ENUMERATED_VALVES {
        return Err(EngineError::TooManyValves { count });
    }
    let mut fixed_points = Vec::new();
    for mask in 0u32..(1u32 << count) {
        let candidate: Vec<ValveState> = (0..count)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    ValveState::Closed
                } else {
                    ValveState::Open
                }
            })
            .collect();
        let solved = solve(net, &candidate)?;
        if step_all(net, &candidate, &solved.pressures) == candidate {
            fixed_points.push(candidate);
        }
    }
    // closest to the seed wins; enumeration order breaks ties
    let best = fixed_points
        .iter()
        .min_by_key(|fp| fp.iter().zip(seed).filter(|(a, b)| a != b).count())
        .cloned()
        .ok_or(EngineError::AstableCircuit)?;
    let solved = solve(net, &best)?;
    Ok(finish(net, best, solved, DcMethod::Enumeration, fixed_points))
}

fn finish(
    net: &PneumaticNetwork,
    states: Vec<ValveState>,
    solved: Solved,
    method: DcMethod,
    fixed_points: Vec<Vec<ValveState>>,
) -> SteadyState {
    let (inflow, _) = node_balance(net, &states, &solved.pressures);
    // zero-resistance groups balance as a whole
    let mut group_sum = vec![0.0; net.node_count()];
    for (i, q) in inflow.iter().enumerate() {
        let id = NodeId(i);
        if solved.system.is_solved(id) {
            group_sum[solved.system.group(id)] += q;
        }
    }
    let worst = group_sum.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    let p_max = solved.pressures.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    let g_max = net
        .tubes
        .iter()
        .filter(|t| t.resistance > 0.0)
        .map(|t| 1.0 / t.resistance)
        .chain(net.valves.iter().zip(&states).map(|(v, &s)| v.conductance(s)))
        .fold(0.0f64, f64::max);
    let scale = p_max * g_max;
    let relative_residual = if scale > 0.0 { worst / scale } else { 0.0 };

    let burst_warnings = net
        .capacitors()
        .iter()
        .filter(|c| solved.pressures[c.node.0] > c.params.burst_pressure * 1e3)
        .map(|c| c.node)
        .collect();

    SteadyState {
        valve_states: states,
        node_pressures: solved.pressures.iter().copied().map(Pressure::from_pa).collect(),
        converged: true,
        method,
        fixed_points,
        floating: solved.system.floating_nodes().collect(),
        burst_warnings,
        relative_residual,
    }
}
