//! Two-phase primal simplex on a dense tableau with bounded variables.
//! Nonbasic variables rest at a finite bound; infeasible starting rows get
//! artificial columns driven out in phase 1. Bland's rule engages after a
//! run of degenerate pivots to guarantee termination.

use super::{MipModel, RowSense, Sense, SolveError};

const TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const MAX_ITER: usize = 500_000;
const BLAND_TRIGGER: usize = 1_000;

pub(crate) enum Outcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColStatus {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau {
    /// m rows by (ncols + 1); the trailing column is B^-1 b.
    rows: Vec<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    status: Vec<ColStatus>,
    value: Vec<f64>,
    basis: Vec<usize>,
    n_structural: usize,
    n_artificial_start: usize,
    degenerate_pivots: usize,
    iterations: usize,
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

pub(crate) fn solve(model: &MipModel, bounds: &[(f64, f64)]) -> Result<Outcome, SolveError> {
    solve_with_bounds(model, bounds)
}

/// Solves the continuous program `min/max c'x  s.t. rows, bounds`; binaries
/// are treated as continuous within the given bounds.
pub(crate) fn solve_with_bounds(
    model: &MipModel,
    bounds: &[(f64, f64)],
) -> Result<Outcome, SolveError> {
    let n = model.vars.len();
    let m = model.constraints.len();
    for &(lo, hi) in bounds {
        if lo > hi + 1e-12 {
            return Ok(Outcome::Infeasible);
        }
    }
    if m == 0 {
        // pure box problem
        let sign = sense_sign(model.sense);
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let c = sign * model.objective[j];
                if c > 0.0 {
                    bounds[j].0
                } else if c < 0.0 {
                    if bounds[j].1.is_finite() {
                        bounds[j].1
                    } else {
                        f64::INFINITY
                    }
                } else {
                    bounds[j].0
                }
            })
            .collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(Outcome::Unbounded);
        }
        let objective = model.objective_value(&x);
        return Ok(Outcome::Optimal { x, objective });
    }

    let mut lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let mut upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = i;
        let (lo, hi) = match c.sense {
            RowSense::Le => (0.0, f64::INFINITY),
            RowSense::Ge => (f64::NEG_INFINITY, 0.0),
            RowSense::Eq => (0.0, 0.0),
        };
        lower.push(lo);
        upper.push(hi);
    }

    // nonbasic start: structurals at lower, slacks basic
    let mut value = vec![0.0; n + m];
    let mut status = vec![ColStatus::AtLower; n + m];
    for j in 0..n {
        value[j] = lower[j];
    }
    let mut slack_value = vec![0.0; m];
    for (i, c) in model.constraints.iter().enumerate() {
        let lhs: f64 = c.terms.iter().map(|&(j, a)| a * value[j]).sum();
        slack_value[i] = c.rhs - lhs;
    }

    // rows whose slack starts outside its bounds get an artificial column
    let mut art_sign = vec![0.0f64; m];
    let mut n_art = 0;
    for i in 0..m {
        let (lo, hi) = (lower[n + i], upper[n + i]);
        if slack_value[i] < lo - FEAS_TOL || slack_value[i] > hi + FEAS_TOL {
            art_sign[i] = slack_value[i].signum();
            n_art += 1;
        }
    }

    let ncols = n + m + n_art;
    let mut rows = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    {
        let mut next_art = n + m;
        for (i, c) in model.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                rows[i][j] += a;
            }
            rows[i][n + i] = 1.0;
            rows[i][ncols] = c.rhs;
            if art_sign[i] != 0.0 {
                rows[i][next_art] = art_sign[i];
                basis[i] = next_art;
                // slack parks at the bound nearest its violated value: zero
                // in every row sense
                status[n + i] = if upper[n + i] == 0.0 && lower[n + i] != 0.0 {
                    ColStatus::AtUpper
                } else {
                    ColStatus::AtLower
                };
                value[n + i] = 0.0;
                lower.push(0.0);
                upper.push(f64::INFINITY);
                value.push(slack_value[i].abs());
                status.push(ColStatus::Basic);
                if art_sign[i] < 0.0 {
                    for v in rows[i].iter_mut() {
                        *v = -*v;
                    }
                }
                next_art += 1;
            } else {
                basis[i] = n + i;
                status[n + i] = ColStatus::Basic;
                value[n + i] = slack_value[i];
            }
        }
    }

    let mut tab = Tableau {
        rows,
        lower,
        upper,
        status,
        value,
        basis,
        n_structural: n,
        n_artificial_start: n + m,
        degenerate_pivots: 0,
        iterations: 0,
    };

    if n_art > 0 {
        let mut phase1_costs = vec![0.0; ncols];
        for j in tab.n_artificial_start..ncols {
            phase1_costs[j] = 1.0;
        }
        match run(&mut tab, &phase1_costs, false)? {
            LoopEnd::Unbounded => return Err(SolveError::Singular),
            LoopEnd::Optimal => {}
        }
        let infeasibility: f64 = (tab.n_artificial_start..ncols).map(|j| tab.value[j]).sum();
        if infeasibility > FEAS_TOL {
            return Ok(Outcome::Infeasible);
        }
        drive_out_artificials(&mut tab);
        for j in tab.n_artificial_start..ncols {
            tab.lower[j] = 0.0;
            tab.upper[j] = 0.0;
        }
        tab.recompute_basic_values();
    }

    let sign = sense_sign(model.sense);
    let mut phase2_costs = vec![0.0; ncols];
    for j in 0..n {
        phase2_costs[j] = sign * model.objective[j];
    }
    match run(&mut tab, &phase2_costs, true)? {
        LoopEnd::Unbounded => Ok(Outcome::Unbounded),
        LoopEnd::Optimal => {
            let x: Vec<f64> = (0..n)
                .map(|j| {
                    let v = tab.value[j];
                    let hi = tab.upper[j];
                    if hi.is_finite() {
                        v.clamp(tab.lower[j], hi)
                    } else {
                        v.max(tab.lower[j])
                    }
                })
                .collect();
            let objective = model.objective_value(&x);
            Ok(Outcome::Optimal { x, objective })
        }
    }
}

fn sense_sign(sense: Sense) -> f64 {
    match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    }
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.lower.len()
    }

    fn recompute_basic_values(&mut self) {
        let ncols = self.ncols();
        for (i, row) in self.rows.iter().enumerate() {
            let mut v = row[ncols];
            for j in 0..ncols {
                if self.status[j] != ColStatus::Basic && self.value[j] != 0.0 {
                    v -= row[j] * self.value[j];
                }
            }
            self.value[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        debug_assert!(piv.abs() > TOL);
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (dst, src) in row.iter_mut().zip(&pivot_row) {
                    *dst -= f * src;
                }
                row[j] = 0.0;
            }
        }
        self.rows[r][j] = 1.0;
        self.basis[r] = j;
        self.status[j] = ColStatus::Basic;
    }
}

/// Pushes any artificial still in the basis out through a usable column, or
/// pins it when its row turned out redundant.
fn drive_out_artificials(tab: &mut Tableau) {
    for r in 0..tab.rows.len() {
        let b = tab.basis[r];
        if b < tab.n_artificial_start {
            continue;
        }
        let col = (0..tab.n_artificial_start)
            .find(|&j| tab.status[j] != ColStatus::Basic && tab.rows[r][j].abs() > TOL);
        if let Some(j) = col {
            let entering_value = tab.value[j];
            tab.pivot(r, j);
            tab.value[j] = entering_value;
            tab.value[b] = 0.0;
            tab.status[b] = ColStatus::AtLower;
        }
        // no usable column: the row is linearly dependent and the artificial
        // stays basic at zero forever
    }
}

fn run(tab: &mut Tableau, costs: &[f64], allow_unbounded: bool) -> Result<LoopEnd, SolveError> {
    let ncols = tab.ncols();
    let m = tab.rows.len();
    let mut reduced = vec![0.0; ncols];
    loop {
        tab.iterations += 1;
        if tab.iterations > MAX_ITER {
            return Err(SolveError::IterationLimit);
        }
        if tab.iterations % 512 == 0 {
            tab.recompute_basic_values();
        }

        // reduced costs r = c - c_B' T
        reduced.copy_from_slice(costs);
        for i in 0..m {
            let cb = costs[tab.basis[i]];
            if cb != 0.0 {
                let row = &tab.rows[i];
                for j in 0..ncols {
                    reduced[j] -= cb * row[j];
                }
            }
        }

        let bland = tab.degenerate_pivots >= BLAND_TRIGGER;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..ncols {
            if tab.status[j] == ColStatus::Basic || tab.lower[j] == tab.upper[j] {
                continue;
            }
            let improving = match tab.status[j] {
                ColStatus::AtLower => reduced[j] < -TOL,
                ColStatus::AtUpper => reduced[j] > TOL,
                ColStatus::Basic => false,
            };
            if !improving {
                continue;
            }
            if bland {
                entering = Some((j, reduced[j]));
                break;
            }
            match entering {
                Some((_, best)) if reduced[j].abs() <= best.abs() => {}
                _ => entering = Some((j, reduced[j])),
            }
        }
        let Some((j, _)) = entering else {
            return Ok(LoopEnd::Optimal);
        };

        let dir = match tab.status[j] {
            ColStatus::AtLower => 1.0,
            _ => -1.0,
        };

        // ratio test: how far x_j can move before a basic variable or x_j
        // itself hits a bound; ties prefer the bound flip, then the larger
        // pivot (or the smallest basis index under Bland's rule)
        let own_limit = if tab.upper[j].is_finite() {
            tab.upper[j] - tab.lower[j]
        } else {
            f64::INFINITY
        };
        let mut best_t = own_limit;
        let mut leave: Option<(usize, bool)> = None; // (row, leaves_at_upper)
        for i in 0..m {
            let rate = -dir * tab.rows[i][j];
            if rate.abs() <= TOL {
                continue;
            }
            let k = tab.basis[i];
            let t = if rate < 0.0 {
                (tab.value[k] - tab.lower[k]).max(0.0) / -rate
            } else {
                if !tab.upper[k].is_finite() {
                    continue;
                }
                (tab.upper[k] - tab.value[k]).max(0.0) / rate
            };
            if t > best_t + TOL {
                continue;
            }
            let take = if t < best_t - TOL {
                true
            } else {
                match leave {
                    None => false, // tie against the flip: keep the flip
                    Some((r, _)) => {
                        if bland {
                            tab.basis[i] < tab.basis[r]
                        } else {
                            tab.rows[i][j].abs() > tab.rows[r][j].abs()
                        }
                    }
                }
            };
            if take {
                best_t = best_t.min(t).max(0.0);
                leave = Some((i, rate > 0.0));
            }
        }

        if best_t.is_infinite() {
            return if allow_unbounded {
                Ok(LoopEnd::Unbounded)
            } else {
                Err(SolveError::Singular)
            };
        }
        if best_t <= TOL {
            tab.degenerate_pivots += 1;
        } else {
            tab.degenerate_pivots = 0;
        }

        match leave {
            None => {
                // entering variable slides to its other bound
                for i in 0..m {
                    let k = tab.basis[i];
                    tab.value[k] -= dir * best_t * tab.rows[i][j];
                }
                tab.status[j] = if dir > 0.0 {
                    ColStatus::AtUpper
                } else {
                    ColStatus::AtLower
                };
                tab.value[j] = if dir > 0.0 { tab.upper[j] } else { tab.lower[j] };
            }
            Some((r, leaves_at_upper)) => {
                for i in 0..m {
                    if i != r {
                        let k = tab.basis[i];
                        tab.value[k] -= dir * best_t * tab.rows[i][j];
                    }
                }
                let k = tab.basis[r];
                tab.value[k] = if leaves_at_upper {
                    tab.upper[k]
                } else {
                    tab.lower[k]
                };
                tab.status[k] = if leaves_at_upper {
                    ColStatus::AtUpper
                } else {
                    ColStatus::AtLower
                };
                let entering_value = tab.value[j] + dir * best_t;
                tab.pivot(r, j);
                tab.value[j] = entering_value;
            }
        }
    }
}
