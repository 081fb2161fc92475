//! Instrumented-bus stage models: the batch stage (trip-coverage reward plus
//! weighted sensing minus relocation cost) and the sensing-extreme stages
//! used by the bounding sub-problems.

use super::{extract_schedules, FormulationError, Schedule, VarRegistry};
use crate::instance::Instance;
use crate::mip::{branch_and_bound_solve, MipModel, RowSense, Sense, Solution};
use crate::network::{ArcKind, Network};
use crate::sensing::SensingProfile;
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum IbObjective {
    /// max Σ c_a h_a + ω·δ·Σ μ r − Σ_relocation c_a y
    Batch { omega: f64 },
    /// max Σ μ r
    SensingOnly,
    /// min Σ c_a y subject to Σ μ r ≥ floor
    MinCostWithSensingFloor { floor: f64 },
}

/// The batch scheduling stage model over a fleet of `ib_count` sensor
/// carriers. Always feasible: no trip has to be covered here.
pub fn build_ib_submodel(
    net: &Network,
    inst: &Instance,
    omega: f64,
    ib_count: usize,
) -> (MipModel, VarRegistry) {
    build_ib_stage(net, inst, ib_count, IbObjective::Batch { omega })
}

pub(super) fn build_ib_stage(
    net: &Network,
    inst: &Instance,
    ib_count: usize,
    objective: IbObjective,
) -> (MipModel, VarRegistry) {
    let n_arcs = net.arcs.len();
    let with_h = matches!(objective, IbObjective::Batch { .. });
    let sense = match objective {
        IbObjective::MinCostWithSensingFloor { .. } => Sense::Minimize,
        _ => Sense::Maximize,
    };
    let mut m = MipModel::new(sense);

    let v: Vec<Vec<usize>> = (0..ib_count)
        .map(|b| {
            (0..net.depots.len())
                .map(|d| m.add_binary(format!("v[{b},{d}]")))
                .collect()
        })
        .collect();
    let y: Vec<Vec<usize>> = (0..ib_count)
        .map(|b| {
            (0..n_arcs)
                .map(|a| m.add_binary(format!("y[{b},{a}]")))
                .collect()
        })
        .collect();
    let mut h = vec![None; n_arcs];
    if with_h {
        for a in net.arc_ids(ArcKind::Service) {
            h[a] = Some(m.add_binary(format!("h[{a}]")));
        }
    }
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
                    let cap = inst.pwl.eval((incidence[g][k] as usize * ib_count) as f64);
                    m.add_continuous(0.0, cap, format!("r[{g},{k}]"))
                })
                .collect()
        })
        .collect();

    match objective {
        IbObjective::Batch { omega } => {
            for a in net.arc_ids(ArcKind::Service) {
                m.set_objective_coef(h[a].unwrap(), net.arcs[a].cost);
            }
            for g in 0..inst.grids.len() {
                for k in 0..inst.periods() {
                    m.set_objective_coef(r[g][k], omega * inst.delta * inst.mu[g][k]);
                }
            }
            for b in 0..ib_count {
                for a in net.arc_ids(ArcKind::Relocation) {
                    m.set_objective_coef(y[b][a], -net.arcs[a].cost);
                }
            }
        }
        IbObjective::SensingOnly => {
            for g in 0..inst.grids.len() {
                for k in 0..inst.periods() {
                    m.set_objective_coef(r[g][k], inst.mu[g][k]);
                }
            }
        }
        IbObjective::MinCostWithSensingFloor { .. } => {
            for b in 0..ib_count {
                for a in 0..n_arcs {
                    m.set_objective_coef(y[b][a], net.arcs[a].cost);
                }
            }
        }
    }

    for b in 0..ib_count {
        m.add_constraint(v[b].iter().map(|&var| (var, 1.0)), RowSense::Le, 1.0);
    }
    for b in 0..ib_count {
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
    for b in 0..ib_count {
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
    for b in 0..ib_count {
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
    for b in 0..ib_count {
        for &(a1, a2) in &net.immediate_return_pairs {
            m.add_constraint([(y[b][a1], 1.0), (y[b][a2], 1.0)], RowSense::Le, 1.0);
        }
    }
    if with_h {
        // a trip counts as covered at most once, no matter how many sensor
        // carriers traverse it
        for a in net.arc_ids(ArcKind::Service) {
            let mut terms: Vec<(usize, f64)> =
                (0..ib_count).map(|b| (y[b][a], 1.0)).collect();
            terms.push((h[a].unwrap(), -1.0));
            m.add_constraint(terms, RowSense::Ge, 0.0);
        }
    }
    // envelope rows over the stage coverage count q = Σ_b Σ_a y β
    for g in 0..inst.grids.len() {
        for k in 0..inst.periods() {
            for &(slope, intercept) in &inst.pwl.segments {
                let mut terms = vec![(r[g][k], 1.0)];
                if slope != 0.0 {
                    for (a, arc) in net.arcs.iter().enumerate() {
                        if arc.coverage.contains(&(g, k)) {
                            for b in 0..ib_count {
                                terms.push((y[b][a], -slope));
                            }
                        }
                    }
                }
                m.add_constraint(terms, RowSense::Le, intercept);
            }
        }
    }
    if let IbObjective::MinCostWithSensingFloor { floor } = objective {
        let terms: Vec<(usize, f64)> = r
            .iter()
            .enumerate()
            .flat_map(|(g, row)| {
                row.iter()
                    .enumerate()
                    .map(move |(k, &var)| (var, inst.mu[g][k]))
                    .collect::<Vec<_>>()
            })
            .filter(|&(_, c)| c != 0.0)
            .collect();
        m.add_constraint(terms, RowSense::Ge, floor);
    }

    let reg = VarRegistry {
        n_buses: ib_count,
        x: Vec::new(),
        v,
        y,
        z: vec![vec![None; n_arcs]; ib_count],
        h,
        r,
        fallback_is_ib: true,
    };
    (m, reg)
}

#[derive(Debug, Clone)]
pub struct IbSolve {
    pub solution: Solution,
    pub schedules: Vec<Schedule>,
    /// Service arcs covered by the stage (h = 1, or traversed when there is
    /// no h variable).
    pub covered: Vec<usize>,
    pub sensing: SensingProfile,
    pub cost: f64,
}

pub fn solve_ib_submodel(
    net: &Network,
    inst: &Instance,
    omega: f64,
    ib_count: usize,
    mipgap: f64,
    time_limit: Option<Duration>,
) -> Result<IbSolve, FormulationError> {
    solve_ib_stage(net, inst, ib_count, IbObjective::Batch { omega }, mipgap, time_limit)
}

pub(super) fn solve_ib_stage(
    net: &Network,
    inst: &Instance,
    ib_count: usize,
    objective: IbObjective,
    mipgap: f64,
    time_limit: Option<Duration>,
) -> Result<IbSolve, FormulationError> {
    let (model, reg) = build_ib_stage(net, inst, ib_count, objective);
    let mut solution = branch_and_bound_solve(&model, mipgap, None, time_limit)?;
    if !solution.has_assignment() {
        return Err(FormulationError::NoSolution {
            status: solution.status,
        });
    }
    reg.tighten_sensing(&mut solution.assignment, net, inst);
    let schedules = extract_schedules(&solution, &reg, net)?;
    let covered = match objective {
        IbObjective::Batch { .. } => net
            .arc_ids(ArcKind::Service)
            .filter(|&a| solution.assignment[reg.h[a].unwrap()] > 0.5)
            .collect(),
        _ => {
            let mut covered: Vec<usize> = net
                .arc_ids(ArcKind::Service)
                .filter(|a| schedules.iter().any(|s| s.arcs.contains(a)))
                .collect();
            covered.sort_unstable();
            covered
        }
    };
    let ib_paths: Vec<Vec<usize>> = schedules.iter().map(|s| s.arcs.clone()).collect();
    let sensing = SensingProfile::from_paths(&ib_paths, net, inst)
        .expect("extracted schedules are connected");
    let cost = schedules.iter().map(|s| s.cost).sum();
    Ok(IbSolve {
        solution,
        schedules,
        covered,
        sensing,
        cost,
    })
}
