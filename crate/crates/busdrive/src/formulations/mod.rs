//! Concrete optimization models over a time-expanded network: the full
//! linearized assignment-and-scheduling model, the instrumented-bus and
//! normal-bus stage models, the three bounding sub-problems, and the
//! set-covering baseline; plus schedule extraction and verification.

mod flow_model;
mod full_model;
mod ib_model;
mod registry;
mod schedule;
mod set_cover;
mod subproblems;


pub use flow_model::{build_nb_submodel, solve_nb_submodel, NbModel, StageOutcome};
pub use full_model::{build_full_model, solve_full_model, FullSolve};
pub use ib_model::{build_ib_submodel, solve_ib_submodel, IbSolve};
pub use registry::VarRegistry;
pub use schedule::{extract_schedules, schedules_csv, verify_schedule, Schedule, ScheduleTotals};
pub use set_cover::{build_m1_set_cover, solve_m1_set_cover, SetCoverRegistry};
pub use subproblems::{build_subproblem, solve_subproblem, Subproblem, SubproblemResult};

use crate::mip::SolveError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("bus {bus}: y values do not form a path ({detail})")]
    BrokenPath { bus: usize, detail: String },
    #[error("{stage} stage is infeasible")]
    StageInfeasible { stage: &'static str },
    #[error("aggregate flow solution is fractional at arc {arc} (value {value})")]
    FractionalFlow { arc: usize, value: f64 },
    #[error("solver stopped without a usable solution ({status:?})")]
    NoSolution { status: crate::mip::SolveStatus },
}
