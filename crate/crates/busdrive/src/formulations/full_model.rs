//! The full linearized assignment-and-scheduling model: minimize bus costs
//! minus the weighted sensing score, subject to depot assignment, flow
//! balance, trip coverage, the sensor-fleet limit, the product
//! linearization rows and the concave envelope rows.

use super::{extract_schedules, FormulationError, Schedule, VarRegistry};
use crate::instance::Instance;
use crate::mip::{
    branch_and_bound_solve, MipModel, RowSense, Sense, Solution, SolveStatus,
};
use crate::network::{ArcKind, Network};
use crate::sensing::SensingProfile;
use std::time::Duration;

pub fn build_full_model(net: &Network, inst: &Instance) -> (MipModel, VarRegistry) {
    let n_buses = inst.fleet.total;
    let n_arcs = net.arcs.len();
    let mut m = MipModel::new(Sense::Minimize);

    let x: Vec<usize> = (0..n_buses).map(|b| m.add_binary(format!("x[{b}]"))).collect();
    let v: Vec<Vec<usize>> = (0..n_buses)
        .map(|b| {
            (0..net.depots.len())
                .map(|d| m.add_binary(format!("v[{b},{d}]")))
                .collect()
        })
        .collect();
    let y: Vec<Vec<usize>> = (0..n_buses)
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
    let z: Vec<Vec<Option<usize>>> = (0..n_buses)
        .map(|b| {
            (0..n_arcs)
                .map(|a| {
                    if net.arcs[a].coverage.is_empty() {
                        None
                    } else {
                        Some(m.add_continuous(0.0, 1.0, format!("z[{b},{a}]")))
                    }
                })
                .collect()
        })
        .collect();

    // incidence count per (grid, period) caps each r at its reachable value
    let mut incidence = vec![vec![0u32; inst.periods()]; inst.grids.len()];
    for arc in &net.arcs {
        for &(g, k) in &arc.coverage {
            incidence[g][k] += 1;
        }
    }
    let r: Vec<Vec<usize>> = (0..inst.grids.len())
        .map(|g| {
            (0..inst.periods())
                .map(|k| {
                    let cap = inst.pwl.eval((incidence[g][k] * n_buses as u32) as f64);
                    let var = m.add_continuous(0.0, cap, format!("r[{g},{k}]"));
                    m.set_objective_coef(var, -inst.delta * inst.mu[g][k]);
                    var
                })
                .collect()
        })
        .collect();

    for b in 0..n_buses {
        m.add_constraint(v[b].iter().map(|&var| (var, 1.0)), RowSense::Le, 1.0);
    }
    for b in 0..n_buses {
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
    for b in 0..n_buses {
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
    for b in 0..n_buses {
        for node in 0..net.nodes.len() {
            if !matches!(net.nodes[node], crate::network::NodeKind::Timed { .. }) {
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
    for b in 0..n_buses {
        for &(a1, a2) in &net.immediate_return_pairs {
            m.add_constraint([(y[b][a1], 1.0), (y[b][a2], 1.0)], RowSense::Le, 1.0);
        }
    }
    for a in net.arc_ids(ArcKind::Service) {
        m.add_constraint((0..n_buses).map(|b| (y[b][a], 1.0)), RowSense::Ge, 1.0);
    }
    m.add_constraint(
        x.iter().map(|&var| (var, 1.0)),
        if inst.fleet.ib_exact {
            RowSense::Eq
        } else {
            RowSense::Le
        },
        inst.fleet.max_ib as f64,
    );
    for b in 0..n_buses {
        for a in 0..n_arcs {
            if let Some(zv) = z[b][a] {
                m.add_constraint([(zv, 1.0), (x[b], -1.0)], RowSense::Le, 0.0);
                m.add_constraint([(zv, 1.0), (y[b][a], -1.0)], RowSense::Le, 0.0);
                m.add_constraint(
                    [(zv, 1.0), (x[b], -1.0), (y[b][a], -1.0)],
                    RowSense::Ge,
                    -1.0,
                );
            }
        }
    }
    // envelope rows with the coverage count inlined: r <= m_l * q + c_l
    for g in 0..inst.grids.len() {
        for k in 0..inst.periods() {
            for &(slope, intercept) in &inst.pwl.segments {
                let mut terms = vec![(r[g][k], 1.0)];
                if slope != 0.0 {
                    for b in 0..n_buses {
                        for (a, zv) in z[b].iter().enumerate() {
                            if let Some(zv) = *zv {
                                if net.arcs[a].coverage.contains(&(g, k)) {
                                    terms.push((zv, -slope));
                                }
                            }
                        }
                    }
                }
                m.add_constraint(terms, RowSense::Le, intercept);
            }
        }
    }

    let reg = VarRegistry {
        n_buses,
        x,
        v,
        y,
        z,
        h: vec![None; n_arcs],
        r,
        fallback_is_ib: false,
    };
    (m, reg)
}

/// Outcome of an exact (or gap-limited) solve of the full model.
#[derive(Debug, Clone)]
pub struct FullSolve {
    pub solution: Solution,
    pub schedules: Vec<Schedule>,
    pub sensing: SensingProfile,
    /// Total cost over all schedules.
    pub cost: f64,
    /// cost - delta * score; equals the solver objective at integral points.
    pub combined_objective: f64,
}

pub fn solve_full_model(
    net: &Network,
    inst: &Instance,
    mipgap: f64,
    node_limit: Option<usize>,
    time_limit: Option<Duration>,
) -> Result<FullSolve, FormulationError> {
    let (model, reg) = build_full_model(net, inst);
    let mut solution = branch_and_bound_solve(&model, mipgap, node_limit, time_limit)?;
    if !solution.has_assignment() {
        return Err(FormulationError::NoSolution {
            status: solution.status,
        });
    }
    reg.tighten_sensing(&mut solution.assignment, net, inst);
    finish_full(solution, &reg, net, inst)
}

pub(super) fn finish_full(
    solution: Solution,
    reg: &VarRegistry,
    net: &Network,
    inst: &Instance,
) -> Result<FullSolve, FormulationError> {
    let schedules = extract_schedules(&solution, reg, net)?;
    let ib_paths: Vec<Vec<usize>> = schedules
        .iter()
        .filter(|s| s.is_ib)
        .map(|s| s.arcs.clone())
        .collect();
    let sensing = SensingProfile::from_paths(&ib_paths, net, inst)
        .expect("extracted schedules are connected");
    let cost: f64 = schedules.iter().map(|s| s.cost).sum();
    let combined_objective = cost - inst.delta * sensing.score;
    Ok(FullSolve {
        solution,
        schedules,
        sensing,
        cost,
        combined_objective,
    })
}

pub(super) fn usable(status: SolveStatus) -> bool {
    matches!(
        status,
        SolveStatus::Optimal | SolveStatus::GapReached | SolveStatus::NodeLimit | SolveStatus::TimeLimit
    )
}
