//! Exhaustive enumeration over the binary variables with constraint
//! propagation. At a full binary assignment the continuous remainder is
//! completed in dependency passes (each variable pushed to its best feasible
//! bound); models outside that shape fall back to a fixed-bound LP solve.
//!
//! Independent of the branch-and-bound path: no LP relaxation bounds are
//! used, only provably infeasible or provably dominated branches are cut.

use super::{simplex, MipModel, RowSense, Sense, Solution, SolveError, SolveStatus, VarKind};

pub const DEFAULT_MAX_BINARIES: usize = 24;

const TOL: f64 = 1e-6;
const NODE_CAP: u64 = 200_000_000;

pub fn brute_force_solve(model: &MipModel, max_binaries: usize) -> Result<Solution, SolveError> {
    model.validate()?;
    let binaries: Vec<usize> = (0..model.vars.len())
        .filter(|&j| model.vars[j].kind == VarKind::Binary)
        .collect();
    if binaries.len() > max_binaries {
        return Err(SolveError::TooManyBinaries {
            limit: max_binaries,
            actual: binaries.len(),
        });
    }
    if binaries.is_empty() {
        return super::lp_relax_solve(model);
    }

    let mut en = Enumerator::new(model, binaries);
    en.dfs()?;
    Ok(match en.best {
        Some((obj_int, assignment)) => {
            let objective = en.sign * obj_int;
            Solution {
                status: SolveStatus::Optimal,
                assignment,
                objective,
                best_bound: objective,
                gap: 0.0,
                nodes_explored: en.nodes as usize,
            }
        }
        None => Solution {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::NAN,
            nodes_explored: en.nodes as usize,
        },
    })
}

struct RowState {
    window_lo: f64,
    window_hi: f64,
    act_min: f64,
    act_max: f64,
    /// (binary position, coefficient)
    bin_terms: Vec<(usize, f64)>,
}

struct Enumerator<'a> {
    model: &'a MipModel,
    binaries: Vec<usize>,
    rows: Vec<RowState>,
    /// rows touching each binary position, with coefficients
    bin_rows: Vec<Vec<(usize, f64)>>,
    val: Vec<i8>, // -1 unfixed
    /// internal (minimization) objective coefficient per binary position
    obj_coef: Vec<f64>,
    obj_fixed: f64,
    obj_unfixed_min: f64,
    obj_const_min: f64,
    sign: f64,
    best: Option<(f64, Vec<f64>)>,
    nodes: u64,
}

impl<'a> Enumerator<'a> {
    fn new(model: &'a MipModel, binaries: Vec<usize>) -> Self {
        let sign = match model.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut pos_of = vec![usize::MAX; model.vars.len()];
        for (p, &j) in binaries.iter().enumerate() {
            pos_of[j] = p;
        }
        let mut rows = Vec::with_capacity(model.constraints.len());
        let mut bin_rows = vec![Vec::new(); binaries.len()];
        for (r, c) in model.constraints.iter().enumerate() {
            let (window_lo, window_hi) = match c.sense {
                RowSense::Le => (f64::NEG_INFINITY, c.rhs),
                RowSense::Ge => (c.rhs, f64::INFINITY),
                RowSense::Eq => (c.rhs, c.rhs),
            };
            let mut act_min = 0.0;
            let mut act_max = 0.0;
            let mut bin_terms = Vec::new();
            for &(j, a) in &c.terms {
                if pos_of[j] != usize::MAX {
                    bin_terms.push((pos_of[j], a));
                    act_min += a.min(0.0);
                    act_max += a.max(0.0);
                } else {
                    let v = &model.vars[j];
                    act_min += (a * v.lower).min(a * v.upper);
                    act_max += (a * v.lower).max(a * v.upper);
                }
            }
            for &(p, a) in &bin_terms {
                bin_rows[p].push((r, a));
            }
            rows.push(RowState {
                window_lo,
                window_hi,
                act_min,
                act_max,
                bin_terms,
            });
        }
        let obj_coef: Vec<f64> = binaries.iter().map(|&j| sign * model.objective[j]).collect();
        let obj_unfixed_min = obj_coef.iter().map(|c| c.min(0.0)).sum();
        let obj_const_min: f64 = (0..model.vars.len())
            .filter(|&j| model.vars[j].kind == VarKind::Continuous)
            .map(|j| {
                let c = sign * model.objective[j];
                let v = &model.vars[j];
                (c * v.lower).min(c * v.upper)
            })
            .sum();
        Enumerator {
            model,
            val: vec![-1; binaries.len()],
            binaries,
            rows,
            bin_rows,
            obj_coef,
            obj_fixed: 0.0,
            obj_unfixed_min,
            obj_const_min,
            sign,
            best: None,
            nodes: 0,
        }
    }

    fn row_conflict(&self, r: usize) -> bool {
        let row = &self.rows[r];
        row.act_min > row.window_hi + TOL || row.act_max < row.window_lo - TOL
    }

    fn apply(&mut self, p: usize, v: i8) {
        self.val[p] = v;
        let c = self.obj_coef[p];
        self.obj_fixed += c * v as f64;
        self.obj_unfixed_min -= c.min(0.0);
        for &(r, a) in &self.bin_rows[p] {
            let row = &mut self.rows[r];
            row.act_min += a * v as f64 - a.min(0.0);
            row.act_max += a * v as f64 - a.max(0.0);
        }
    }

    fn undo(&mut self, p: usize) {
        let v = self.val[p];
        self.val[p] = -1;
        let c = self.obj_coef[p];
        self.obj_fixed -= c * v as f64;
        self.obj_unfixed_min += c.min(0.0);
        for &(r, a) in &self.bin_rows[p] {
            let row = &mut self.rows[r];
            row.act_min -= a * v as f64 - a.min(0.0);
            row.act_max -= a * v as f64 - a.max(0.0);
        }
    }

    fn dominated(&self) -> bool {
        match &self.best {
            Some((best, _)) => {
                self.obj_const_min + self.obj_fixed + self.obj_unfixed_min >= best - 1e-9
            }
            None => false,
        }
    }

    /// Fixes `p := v`, propagating forced values. Returns the trail of all
    /// positions fixed, or None on conflict (trail already unwound).
    fn assume(&mut self, p: usize, v: i8) -> Option<Vec<usize>> {
        let mut trail = vec![p];
        self.apply(p, v);
        let mut queue: Vec<usize> = self.bin_rows[p].iter().map(|&(r, _)| r).collect();
        let mut qi = 0;
        let mut ok = !self.dominated();
        'outer: while ok && qi < queue.len() {
            let r = queue[qi];
            qi += 1;
            if self.row_conflict(r) {
                ok = false;
                break;
            }
            // force any binary whose remaining value leaves the row
            // unsatisfiable
            let terms = self.rows[r].bin_terms.clone();
            for (p2, a) in terms {
                if self.val[p2] != -1 {
                    continue;
                }
                let row = &self.rows[r];
                let feasible = |v2: f64| {
                    let amin = row.act_min + a * v2 - a.min(0.0);
                    let amax = row.act_max + a * v2 - a.max(0.0);
                    amin <= row.window_hi + TOL && amax >= row.window_lo - TOL
                };
                match (feasible(0.0), feasible(1.0)) {
                    (false, false) => {
                        ok = false;
                        break 'outer;
                    }
                    (true, false) | (false, true) => {
                        let forced = if feasible(1.0) { 1 } else { 0 };
                        trail.push(p2);
                        self.apply(p2, forced);
                        if self.dominated() {
                            ok = false;
                            break 'outer;
                        }
                        for &(r2, _) in &self.bin_rows[p2] {
                            if !queue.contains(&r2) {
                                queue.push(r2);
                            }
                        }
                    }
                    (true, true) => {}
                }
            }
        }
        if ok {
            Some(trail)
        } else {
            for &q in trail.iter().rev() {
                self.undo(q);
            }
            None
        }
    }

    fn dfs(&mut self) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes > NODE_CAP {
            return Err(SolveError::IterationLimit);
        }
        let next = self.val.iter().position(|&v| v == -1);
        let Some(p) = next else {
            self.evaluate_leaf()?;
            return Ok(());
        };
        let order: [i8; 2] = if self.obj_coef[p] > 0.0 { [0, 1] } else { [1, 0] };
        for v in order {
            if let Some(trail) = self.assume(p, v) {
                self.dfs()?;
                for &q in trail.iter().rev() {
                    self.undo(q);
                }
            }
        }
        Ok(())
    }

    fn evaluate_leaf(&mut self) -> Result<(), SolveError> {
        let n = self.model.vars.len();
        let mut x = vec![f64::NAN; n];
        for (p, &j) in self.binaries.iter().enumerate() {
            x[j] = self.val[p] as f64;
        }

        let mut remaining: Vec<usize> = (0..n)
            .filter(|&j| self.model.vars[j].kind == VarKind::Continuous)
            .collect();
        let mut closed_form = true;
        let mut progressed = true;
        while closed_form && progressed && !remaining.is_empty() {
            progressed = false;
            for idx in 0..remaining.len() {
                let j = remaining[idx];
                match self.determine(j, &x) {
                    Determine::Value(v) => {
                        x[j] = v;
                        progressed = true;
                    }
                    Determine::NotReady => {}
                    Determine::InfeasibleLeaf => return Ok(()),
                    Determine::NeedLp => {
                        closed_form = false;
                        break;
                    }
                }
            }
            remaining.retain(|&j| x[j].is_nan());
        }

        if closed_form && remaining.is_empty() && self.model.assignment_feasible(&x, TOL) {
            self.offer(self.model.objective_value(&x), x);
            return Ok(());
        }

        // generic fallback: LP over the continuous remainder with the
        // binaries pinned
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|j| match self.model.vars[j].kind {
                VarKind::Binary => {
                    let v = x[j];
                    (v, v)
                }
                VarKind::Continuous => (self.model.vars[j].lower, self.model.vars[j].upper),
            })
            .collect();
        match simplex::solve_with_bounds(self.model, &bounds)? {
            simplex::Outcome::Optimal { x, objective } => self.offer(objective, x),
            simplex::Outcome::Infeasible | simplex::Outcome::Unbounded => {}
        }
        Ok(())
    }

    fn offer(&mut self, objective_user: f64, x: Vec<f64>) {
        let obj_int = self.sign * objective_user;
        if self.best.as_ref().map_or(true, |(b, _)| obj_int < b - 1e-9) {
            self.best = Some((obj_int, x));
        }
    }

    /// Interval for variable `j` from its bounds plus every row whose other
    /// variables are known. A row sharing an undetermined lower-indexed
    /// variable defers `j` to a later pass; one sharing only higher-indexed
    /// undetermined variables ("skipped") is left to those variables — legal
    /// only when `j`'s chosen direction weakly relaxes the skipped row, so
    /// the choice never shrinks the later variables' feasible set.
    fn determine(&self, j: usize, x: &[f64]) -> Determine {
        let v = &self.model.vars[j];
        let mut lo = v.lower;
        let mut hi = v.upper;
        let mut up_safe = true;
        let mut down_safe = true;
        for c in &self.model.constraints {
            let Some(&(_, coef)) = c.terms.iter().find(|&&(k, _)| k == j) else {
                continue;
            };
            if coef == 0.0 {
                continue;
            }
            let mut known = 0.0;
            let mut skip_row = false;
            for &(k, a) in &c.terms {
                if k == j {
                    continue;
                }
                if x[k].is_nan() {
                    if k < j {
                        return Determine::NotReady;
                    }
                    skip_row = true;
                    break;
                }
                known += a * x[k];
            }
            let (row_lo, row_hi) = match c.sense {
                RowSense::Le => (f64::NEG_INFINITY, c.rhs),
                RowSense::Ge => (c.rhs, f64::INFINITY),
                RowSense::Eq => (c.rhs, c.rhs),
            };
            if skip_row {
                // moving j up raises the LHS when coef > 0: harmless only if
                // the upper window side is open; symmetrically for the rest
                if coef > 0.0 {
                    if row_hi.is_finite() {
                        up_safe = false;
                    }
                    if row_lo.is_finite() {
                        down_safe = false;
                    }
                } else {
                    if row_lo.is_finite() {
                        up_safe = false;
                    }
                    if row_hi.is_finite() {
                        down_safe = false;
                    }
                }
                continue;
            }
            if coef > 0.0 {
                lo = lo.max((row_lo - known) / coef);
                hi = hi.min((row_hi - known) / coef);
            } else {
                lo = lo.max((row_hi - known) / coef);
                hi = hi.min((row_lo - known) / coef);
            }
        }
        if lo > hi + TOL {
            return Determine::InfeasibleLeaf;
        }
        let c = self.sign * self.model.objective[j];
        if c > 0.0 {
            if down_safe {
                Determine::Value(lo)
            } else {
                Determine::NeedLp
            }
        } else if c < 0.0 {
            if hi.is_finite() && up_safe {
                Determine::Value(hi)
            } else {
                Determine::NeedLp
            }
        } else if up_safe && hi.is_finite() {
            Determine::Value(hi)
        } else if down_safe {
            Determine::Value(lo)
        } else {
            Determine::NeedLp
        }
    }
}

enum Determine {
    Value(f64),
    NotReady,
    InfeasibleLeaf,
    NeedLp,
}
