//! Generic mixed-binary linear programs: model representation, an LP
//! relaxation solver, deterministic branch-and-bound, and an exhaustive
//! enumeration oracle for small models.

mod branch_bound;
mod brute;
mod simplex;

pub use branch_bound::branch_and_bound_solve;
pub use brute::{brute_force_solve, DEFAULT_MAX_BINARIES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model is malformed: {0}")]
    Malformed(String),
    #[error("numerically singular basis (after anti-cycling fallback)")]
    Singular,
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("enumeration requires <= {limit} binaries, model has {actual}")]
    TooManyBinaries { limit: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub name: String,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct MipModel {
    pub sense: Sense,
    pub vars: Vec<Variable>,
    /// Dense objective coefficients, one per variable.
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl MipModel {
    pub fn new(sense: Sense) -> Self {
        MipModel {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.vars.push(Variable {
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
            name: name.into(),
        });
        self.objective.push(0.0);
        self.vars.len() - 1
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64, name: impl Into<String>) -> usize {
        self.vars.push(Variable {
            kind: VarKind::Continuous,
            lower,
            upper,
            name: name.into(),
        });
        self.objective.push(0.0);
        self.vars.len() - 1
    }

    pub fn set_objective_coef(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn add_objective_coef(&mut self, var: usize, coef: f64) {
        self.objective[var] += coef;
    }

    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            terms: terms.into_iter().collect(),
            sense,
            rhs,
        });
    }

    pub fn n_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.objective.len() != self.vars.len() {
            return Err(SolveError::Malformed(
                "objective length must match variable count".into(),
            ));
        }
        for (i, v) in self.vars.iter().enumerate() {
            if !v.lower.is_finite() {
                return Err(SolveError::Malformed(format!(
                    "variable {} ({}) needs a finite lower bound",
                    i, v.name
                )));
            }
            if v.lower > v.upper + 1e-12 {
                return Err(SolveError::Malformed(format!(
                    "variable {} ({}) has lower {} above upper {}",
                    i, v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < -1e-12 || v.upper > 1.0 + 1e-12) {
                return Err(SolveError::Malformed(format!(
                    "binary {} ({}) must have bounds within [0,1]",
                    i, v.name
                )));
            }
        }
        for (r, c) in self.constraints.iter().enumerate() {
            for &(j, _) in &c.terms {
                if j >= self.vars.len() {
                    return Err(SolveError::Malformed(format!(
                        "constraint {} references unknown variable {}",
                        r, j
                    )));
                }
            }
        }
        Ok(())
    }

    /// Signed violation-free check of a full assignment.
    pub fn assignment_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.vars.len() {
            return false;
        }
        for (i, v) in self.vars.iter().enumerate() {
            if x[i] < v.lower - tol || x[i] > v.upper + tol {
                return false;
            }
            if v.kind == VarKind::Binary && (x[i] - x[i].round()).abs() > tol {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            match c.sense {
                RowSense::Le => lhs <= c.rhs + tol,
                RowSense::Ge => lhs >= c.rhs - tol,
                RowSense::Eq => (lhs - c.rhs).abs() <= tol,
            }
        })
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Plain-text dump (objective, constraints, bounds, binaries) for
    /// cross-checking against external solvers by hand.
    pub fn write_lp(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n obj:",
            Sense::Maximize => "Maximize\n obj:",
        });
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                out.push_str(&format!(" {:+} {}", c, self.vars[j].name));
            }
        }
        out.push_str("\nSubject To\n");
        for (r, c) in self.constraints.iter().enumerate() {
            out.push_str(&format!(" c{r}:"));
            for &(j, a) in &c.terms {
                out.push_str(&format!(" {:+} {}", a, self.vars[j].name));
            }
            let op = match c.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            out.push_str(&format!(" {op} {}\n", c.rhs));
        }
        out.push_str("Bounds\n");
        for v in &self.vars {
            if v.upper.is_finite() {
                out.push_str(&format!(" {} <= {} <= {}\n", v.lower, v.name, v.upper));
            } else {
                out.push_str(&format!(" {} <= {}\n", v.lower, v.name));
            }
        }
        out.push_str("Binaries\n");
        for v in &self.vars {
            if v.kind == VarKind::Binary {
                out.push_str(&format!(" {}\n", v.name));
            }
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    GapReached,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    /// One value per model variable; empty when no feasible point was found.
    pub assignment: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
}

impl Solution {
    pub fn infeasible() -> Solution {
        Solution {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::NAN,
            nodes_explored: 0,
        }
    }

    pub fn has_assignment(&self) -> bool {
        !self.assignment.is_empty()
    }

    pub fn value(&self, var: usize) -> f64 {
        self.assignment[var]
    }
}

pub(crate) fn relative_gap(objective: f64, bound: f64) -> f64 {
    (objective - bound).abs() / f64::max(1e-9, objective.abs())
}

/// Solves the continuous relaxation (binaries relaxed to [0,1]).
pub fn lp_relax_solve(model: &MipModel) -> Result<Solution, SolveError> {
    model.validate()?;
    let bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lower, v.upper)).collect();
    let outcome = simplex::solve(model, &bounds)?;
    Ok(match outcome {
        simplex::Outcome::Optimal { x, objective } => Solution {
            status: SolveStatus::Optimal,
            assignment: x,
            objective,
            best_bound: objective,
            gap: 0.0,
            nodes_explored: 0,
        },
        simplex::Outcome::Infeasible => Solution::infeasible(),
        simplex::Outcome::Unbounded => Solution {
            status: SolveStatus::Unbounded,
            assignment: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::NAN,
            nodes_explored: 0,
        },
    })
}

pub(crate) use simplex::solve_with_bounds;

#[cfg(test)]
mod tests;
