//! Normal-bus stage: serve the uncovered timetabled trips at minimum cost.
//!
//! With a single depot the identical, anonymous buses collapse into one
//! min-cost circulation (depot sink feeds depot source through a fleet arc
//! capped at the fleet size). The constraint matrix is a network incidence
//! matrix with box bounds, so the LP relaxation has an integral basic
//! optimum and per-bus schedules fall out of a deterministic path
//! decomposition. With several depots the pull-out/pull-in pairing is not
//! expressible in one commodity and the per-bus binary model is used.

use super::{extract_schedules, FormulationError, Schedule, VarRegistry};
use crate::instance::Instance;
use crate::mip::{
    branch_and_bound_solve, lp_relax_solve, MipModel, RowSense, Sense, SolveStatus,
};
use crate::network::{ArcKind, Network, NodeKind};
use std::time::Duration;

pub enum NbModel {
    Flow {
        model: MipModel,
        /// Flow variable per arc, in arc order.
        flows: Vec<usize>,
        fleet: usize,
    },
    PerBus {
        model: MipModel,
        reg: VarRegistry,
    },
}

#[derive(Debug, Clone)]
pub enum StageOutcome {
    Feasible { schedules: Vec<Schedule>, cost: f64 },
    Infeasible,
}

impl StageOutcome {
    pub fn cost(&self) -> f64 {
        match self {
            StageOutcome::Feasible { cost, .. } => *cost,
            StageOutcome::Infeasible => f64::INFINITY,
        }
    }
}

pub fn build_nb_submodel(
    net: &Network,
    inst: &Instance,
    uncovered: &[usize],
    nb_count: usize,
) -> NbModel {
    if net.depots.len() == 1 {
        let (model, flows, fleet) = build_flow(net, uncovered, nb_count);
        NbModel::Flow { model, flows, fleet }
    } else {
        let (model, reg) = build_per_bus(net, inst, uncovered, nb_count);
        NbModel::PerBus { model, reg }
    }
}

fn build_flow(net: &Network, uncovered: &[usize], nb_count: usize) -> (MipModel, Vec<usize>, usize) {
    let mut m = MipModel::new(Sense::Minimize);
    let cap = nb_count as f64;
    let flows: Vec<usize> = net
        .arcs
        .iter()
        .enumerate()
        .map(|(a, arc)| {
            let lo = if uncovered.contains(&a) { 1.0 } else { 0.0 };
            let var = m.add_continuous(lo, cap, format!("f[{a}]"));
            m.set_objective_coef(var, arc.cost);
            var
        })
        .collect();
    let fleet = m.add_continuous(0.0, cap, "fleet".to_string());

    for node in 0..net.nodes.len() {
        let mut terms: Vec<(usize, f64)> = net.in_arcs[node]
            .iter()
            .map(|&a| (flows[a], 1.0))
            .collect();
        terms.extend(net.out_arcs[node].iter().map(|&a| (flows[a], -1.0)));
        match net.nodes[node] {
            NodeKind::Timed { .. } => {}
            NodeKind::DepotSource { .. } => terms.push((fleet, 1.0)),
            NodeKind::DepotSink { .. } => terms.push((fleet, -1.0)),
        }
        m.add_constraint(terms, RowSense::Eq, 0.0);
    }
    (m, flows, fleet)
}

fn build_per_bus(
    net: &Network,
    _inst: &Instance,
    uncovered: &[usize],
    nb_count: usize,
) -> (MipModel, VarRegistry) {
    let n_arcs = net.arcs.len();
    let mut m = MipModel::new(Sense::Minimize);
    let v: Vec<Vec<usize>> = (0..nb_count)
        .map(|b| {
            (0..net.depots.len())
                .map(|d| m.add_binary(format!("v[{b},{d}]")))
                .collect()
        })
        .collect();
    let y: Vec<Vec<usize>> = (0..nb_count)
        .map(|b| {
            (0..n_arcs)
                .map(|a| {
                    let var = m.add_binary(format!("y[{b},{a}]"));
                    m.set_objective_coef(var, net.arcs[a].cost);
                    var
                })
                .collect()
        })
        .collect();

    for b in 0..nb_count {
        m.add_constraint(v[b].iter().map(|&var| (var, 1.0)), RowSense::Le, 1.0);
    }
    for b in 0..nb_count {
        for (pos, _) in net.depots.iter().enumerate() {
            let source = net.depot_source(pos);
            let mut terms: Vec<(usize, f64)> = net.out_arcs[source.0]
                .iter()
                .map(|&a| (y[b][a], 1.0))
                .collect();
            terms.push((v[b][pos], -1.0));
            m.add_constraint(terms, RowSense::Le, 0.0);
        }
    }
    for b in 0..nb_count {
        for (pos, _) in net.depots.iter().enumerate() {
            let source = net.depot_source(pos);
            let sink = net.depot_sink(pos);
            let mut terms: Vec<(usize, f64)> = net.out_arcs[source.0]
                .iter()
                .map(|&a| (y[b][a], 1.0))
                .collect();
            terms.extend(net.in_arcs[sink.0].iter().map(|&a| (y[b][a], -1.0)));
            m.add_constraint(terms, RowSense::Eq, 0.0);
        }
    }
    for b in 0..nb_count {
        for node in 0..net.nodes.len() {
            if !matches!(net.nodes[node], NodeKind::Timed { .. }) {
                continue;
            }
            let mut terms: Vec<(usize, f64)> = net.in_arcs[node]
                .iter()
                .map(|&a| (y[b][a], 1.0))
                .collect();
            terms.extend(net.out_arcs[node].iter().map(|&a| (y[b][a], -1.0)));
            m.add_constraint(terms, RowSense::Eq, 0.0);
        }
    }
    for b in 0..nb_count {
        for &(a1, a2) in &net.immediate_return_pairs {
            m.add_constraint([(y[b][a1], 1.0), (y[b][a2], 1.0)], RowSense::Le, 1.0);
        }
    }
    for &a in uncovered {
        m.add_constraint((0..nb_count).map(|b| (y[b][a], 1.0)), RowSense::Ge, 1.0);
    }

    let reg = VarRegistry {
        n_buses: nb_count,
        x: Vec::new(),
        v,
        y,
        z: vec![vec![None; n_arcs]; nb_count],
        h: vec![None; n_arcs],
        r: Vec::new(),
        fallback_is_ib: false,
    };
    (m, reg)
}

pub fn solve_nb_submodel(
    net: &Network,
    inst: &Instance,
    uncovered: &[usize],
    nb_count: usize,
    mipgap: f64,
    time_limit: Option<Duration>,
) -> Result<StageOutcome, FormulationError> {
    if uncovered.is_empty() {
        return Ok(StageOutcome::Feasible {
            schedules: Vec::new(),
            cost: 0.0,
        });
    }
    if nb_count == 0 {
        return Ok(StageOutcome::Infeasible);
    }
    match build_nb_submodel(net, inst, uncovered, nb_count) {
        NbModel::Flow { model, flows, .. } => {
            let sol = lp_relax_solve(&model)?;
            match sol.status {
                SolveStatus::Infeasible => Ok(StageOutcome::Infeasible),
                SolveStatus::Optimal => {
                    let schedules = decompose_flow(&sol.assignment, &flows, net)?;
                    let cost = schedules.iter().map(|s| s.cost).sum();
                    Ok(StageOutcome::Feasible { schedules, cost })
                }
                status => Err(FormulationError::NoSolution { status }),
            }
        }
        NbModel::PerBus { model, reg } => {
            let sol = branch_and_bound_solve(&model, mipgap, None, time_limit)?;
            match sol.status {
                SolveStatus::Infeasible => Ok(StageOutcome::Infeasible),
                _ if sol.has_assignment() => {
                    let schedules = extract_schedules(&sol, &reg, net)?;
                    let cost = schedules.iter().map(|s| s.cost).sum();
                    Ok(StageOutcome::Feasible { schedules, cost })
                }
                status => Err(FormulationError::NoSolution { status }),
            }
        }
    }
}

/// Splits an integral circulation into per-bus depot-to-depot chains,
/// consuming flow along the smallest-id available arc first.
fn decompose_flow(
    assignment: &[f64],
    flows: &[usize],
    net: &Network,
) -> Result<Vec<Schedule>, FormulationError> {
    let mut remaining: Vec<u32> = Vec::with_capacity(flows.len());
    for (a, &var) in flows.iter().enumerate() {
        let v = assignment[var];
        if (v - v.round()).abs() > 1e-6 {
            return Err(FormulationError::FractionalFlow { arc: a, value: v });
        }
        remaining.push(v.round() as u32);
    }
    let mut out = Vec::new();
    let pullouts: Vec<usize> = net.arc_ids(ArcKind::PullOut).collect();
    let mut bus = 0;
    loop {
        let Some(&start) = pullouts.iter().find(|&&a| remaining[a] > 0) else {
            break;
        };
        remaining[start] -= 1;
        let mut arcs = vec![start];
        let mut node = net.arcs[start].to;
        while !matches!(net.nodes[node.0], NodeKind::DepotSink { .. }) {
            let next = net.out_arcs[node.0]
                .iter()
                .copied()
                .find(|&a| remaining[a] > 0)
                .expect("flow conservation guarantees an outgoing unit");
            remaining[next] -= 1;
            arcs.push(next);
            node = net.arcs[next].to;
        }
        let cost = arcs.iter().map(|&a| net.arcs[a].cost).sum();
        out.push(Schedule {
            bus,
            is_ib: false,
            arcs,
            cost,
        });
        bus += 1;
    }
    Ok(out)
}

#[cfg(test)]
pub(super) fn build_per_bus_for_tests(
    net: &Network,
    inst: &Instance,
    uncovered: &[usize],
    nb_count: usize,
) -> (MipModel, VarRegistry) {
    build_per_bus(net, inst, uncovered, nb_count)
}
