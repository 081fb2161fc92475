//! The three decoupled sub-problems used for optimality analysis: pure
//! cost-minimal operation, the coverage extreme of the batch stage, and the
//! sensing extreme with a lexicographic cost tie-break.

use super::ib_model::{solve_ib_stage, IbObjective};
use super::{solve_nb_submodel, FormulationError, Schedule, StageOutcome};
use crate::instance::Instance;
use crate::network::{ArcKind, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subproblem {
    /// Minimum operating cost serving every trip; no sensing.
    Sp1,
    /// Batch stage at omega = 0 (coverage reward only), then the normal-bus
    /// stage.
    Sp2,
    /// Sensing-maximal stage (with a second solve minimizing cost among
    /// sensing-optimal schedules), then the normal-bus stage.
    Sp3,
}

/// Stage listing of a sub-problem, mostly useful for reports and logs.
pub fn build_subproblem(which: Subproblem) -> &'static [&'static str] {
    match which {
        Subproblem::Sp1 => &["min-cost scheduling over the whole fleet"],
        Subproblem::Sp2 => &[
            "maximize trip coverage minus relocation cost over the sensor fleet",
            "min-cost scheduling of the remaining trips",
        ],
        Subproblem::Sp3 => &[
            "maximize the sensing score over the sensor fleet",
            "minimize sensor-fleet cost at fixed score",
            "min-cost scheduling of the remaining trips",
        ],
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub which: Subproblem,
    /// C*: total operating cost over both fleets.
    pub operational_cost: f64,
    /// R*: sensing score of the sensor fleet (0 for Sp1).
    pub ds_quality: f64,
    pub ib_schedules: Vec<Schedule>,
    pub nb_schedules: Vec<Schedule>,
}

pub fn solve_subproblem(
    net: &Network,
    inst: &Instance,
    which: Subproblem,
    mipgap: f64,
) -> Result<SubproblemResult, FormulationError> {
    let all_trips: Vec<usize> = net.arc_ids(ArcKind::Service).collect();
    let ib_count = inst.fleet.max_ib;
    let nb_count = inst.fleet.total - ib_count;
    match which {
        Subproblem::Sp1 => {
            let outcome =
                solve_nb_submodel(net, inst, &all_trips, inst.fleet.total, mipgap, None)?;
            let StageOutcome::Feasible { schedules, cost } = outcome else {
                return Err(FormulationError::StageInfeasible { stage: "SP1" });
            };
            Ok(SubproblemResult {
                which,
                operational_cost: cost,
                ds_quality: 0.0,
                ib_schedules: Vec::new(),
                nb_schedules: schedules,
            })
        }
        Subproblem::Sp2 => {
            let ib = solve_ib_stage(
                net,
                inst,
                ib_count,
                IbObjective::Batch { omega: 0.0 },
                mipgap,
                None,
            )?;
            let uncovered: Vec<usize> = all_trips
                .iter()
                .copied()
                .filter(|a| !ib.covered.contains(a))
                .collect();
            let nb = solve_nb_submodel(net, inst, &uncovered, nb_count, mipgap, None)?;
            let StageOutcome::Feasible { schedules, cost } = nb else {
                return Err(FormulationError::StageInfeasible { stage: "SP2-NB" });
            };
            Ok(SubproblemResult {
                which,
                operational_cost: ib.cost + cost,
                ds_quality: ib.sensing.score,
                ib_schedules: ib.schedules,
                nb_schedules: schedules,
            })
        }
        Subproblem::Sp3 => {
            let best = solve_ib_stage(net, inst, ib_count, IbObjective::SensingOnly, mipgap, None)?;
            let ds_quality = best.sensing.score;
            // among sensing-optimal schedules, take the cheapest
            let ib = solve_ib_stage(
                net,
                inst,
                ib_count,
                IbObjective::MinCostWithSensingFloor {
                    floor: ds_quality - 1e-6,
                },
                mipgap,
                None,
            )?;
            let uncovered: Vec<usize> = all_trips
                .iter()
                .copied()
                .filter(|a| !ib.covered.contains(a))
                .collect();
            let nb = solve_nb_submodel(net, inst, &uncovered, nb_count, mipgap, None)?;
            let StageOutcome::Feasible { schedules, cost } = nb else {
                return Err(FormulationError::StageInfeasible { stage: "SP3-NB" });
            };
            Ok(SubproblemResult {
                which,
                operational_cost: ib.cost + cost,
                ds_quality,
                ib_schedules: ib.schedules,
                nb_schedules: schedules,
            })
        }
    }
}
