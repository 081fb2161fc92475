use super::*;
use proptest::prelude::*;

fn lp(sense: Sense) -> MipModel {
    MipModel::new(sense)
}

#[test]
fn single_variable_lower_bound() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, 10.0, "x");
    m.set_objective_coef(x, 1.0);
    m.add_constraint([(x, 1.0)], RowSense::Ge, 3.0);
    let sol = lp_relax_solve(&m).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.objective - 3.0).abs() < 1e-9);
    assert!((sol.value(x) - 3.0).abs() < 1e-9);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, 10.0, "x");
    m.set_objective_coef(x, 1.0);
    m.add_constraint([(x, 1.0)], RowSense::Ge, 2.0);
    m.add_constraint([(x, 1.0)], RowSense::Le, 1.0);
    assert_eq!(lp_relax_solve(&m).unwrap().status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_is_detected() {
    let mut m = lp(Sense::Maximize);
    let x = m.add_continuous(0.0, f64::INFINITY, "x");
    let y = m.add_continuous(0.0, f64::INFINITY, "y");
    m.set_objective_coef(x, 1.0);
    m.add_constraint([(x, 1.0), (y, -1.0)], RowSense::Le, 1.0);
    assert_eq!(lp_relax_solve(&m).unwrap().status, SolveStatus::Unbounded);
}

#[test]
fn textbook_maximization() {
    // max x + 2y st x+y <= 6, x+3y <= 12, 2x+y <= 10
    let mut m = lp(Sense::Maximize);
    let x = m.add_continuous(0.0, f64::INFINITY, "x");
    let y = m.add_continuous(0.0, f64::INFINITY, "y");
    m.set_objective_coef(x, 1.0);
    m.set_objective_coef(y, 2.0);
    m.add_constraint([(x, 1.0), (y, 1.0)], RowSense::Le, 6.0);
    m.add_constraint([(x, 1.0), (y, 3.0)], RowSense::Le, 12.0);
    m.add_constraint([(x, 2.0), (y, 1.0)], RowSense::Le, 10.0);
    let sol = lp_relax_solve(&m).unwrap();
    assert!((sol.objective - 9.0).abs() < 1e-9, "got {}", sol.objective);
}

#[test]
fn textbook_minimization_with_ge_rows() {
    // min 4x + 3y st 2x+y >= 8, x+y >= 6, x+2y >= 8
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, f64::INFINITY, "x");
    let y = m.add_continuous(0.0, f64::INFINITY, "y");
    m.set_objective_coef(x, 4.0);
    m.set_objective_coef(y, 3.0);
    m.add_constraint([(x, 2.0), (y, 1.0)], RowSense::Ge, 8.0);
    m.add_constraint([(x, 1.0), (y, 1.0)], RowSense::Ge, 6.0);
    m.add_constraint([(x, 1.0), (y, 2.0)], RowSense::Ge, 8.0);
    let sol = lp_relax_solve(&m).unwrap();
    assert!((sol.objective - 20.0).abs() < 1e-9, "got {}", sol.objective);
}

#[test]
fn equality_rows_and_upper_bounds() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, 5.0, "x");
    let y = m.add_continuous(0.0, 5.0, "y");
    m.set_objective_coef(x, 1.0);
    m.set_objective_coef(y, 2.0);
    m.add_constraint([(x, 1.0), (y, 1.0)], RowSense::Eq, 7.0);
    let sol = lp_relax_solve(&m).unwrap();
    // x hits its upper bound, y picks up the rest
    assert!((sol.value(x) - 5.0).abs() < 1e-9);
    assert!((sol.value(y) - 2.0).abs() < 1e-9);
    assert!((sol.objective - 9.0).abs() < 1e-9);
}

#[test]
fn bound_flip_path() {
    // optimum requires nonbasic variables to jump between bounds
    let mut m = lp(Sense::Maximize);
    let x = m.add_continuous(0.0, 1.0, "x");
    let y = m.add_continuous(0.0, 1.0, "y");
    m.set_objective_coef(x, 1.0);
    m.set_objective_coef(y, 1.0);
    m.add_constraint([(x, 1.0), (y, 1.0)], RowSense::Le, 1.5);
    let sol = lp_relax_solve(&m).unwrap();
    assert!((sol.objective - 1.5).abs() < 1e-9);
}

#[test]
fn relaxation_treats_binaries_as_continuous() {
    let mut m = lp(Sense::Maximize);
    let x = m.add_binary("x");
    m.set_objective_coef(x, 1.0);
    m.add_constraint([(x, 2.0)], RowSense::Le, 1.0);
    let sol = lp_relax_solve(&m).unwrap();
    assert!((sol.value(x) - 0.5).abs() < 1e-9);
}

// ---------------------------------------------------------------------------
// Independent LP oracle: enumerate candidate vertices as solutions of n
// active constraints drawn from rows and bounds, keep the feasible best.
// ---------------------------------------------------------------------------

fn solve_square(a: &mut Vec<Vec<f64>>, b: &mut Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best feasible vertex by exhaustive active-set enumeration, or None when no
/// vertex is feasible (which, with finite boxes, means the LP is infeasible).
fn vertex_oracle(m: &MipModel) -> Option<f64> {
    let n = m.vars.len();
    // candidate active constraints: (row as equality) or a variable pinned
    // to one of its bounds
    let mut active: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &m.constraints {
        let mut row = vec![0.0; n];
        for &(j, a) in &c.terms {
            row[j] += a;
        }
        active.push((row, c.rhs));
    }
    for (j, v) in m.vars.iter().enumerate() {
        let mut row = vec![0.0; n];
        row[j] = 1.0;
        active.push((row.clone(), v.lower));
        if v.upper.is_finite() {
            active.push((row, v.upper));
        }
    }

    let sign = match m.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut best: Option<f64> = None;
    let total = active.len();
    let mut chosen = vec![0usize; n];
    fn combos(
        start: usize,
        depth: usize,
        n: usize,
        total: usize,
        chosen: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == n {
            visit(chosen);
            return;
        }
        for i in start..total {
            chosen[depth] = i;
            combos(i + 1, depth + 1, n, total, chosen, visit);
        }
    }
    let mut consider = |subset: &[usize]| {
        let mut a: Vec<Vec<f64>> = subset.iter().map(|&i| active[i].0.clone()).collect();
        let mut b: Vec<f64> = subset.iter().map(|&i| active[i].1).collect();
        if let Some(x) = solve_square(&mut a, &mut b) {
            if m.assignment_feasible_continuous(&x, 1e-6) {
                let obj = sign * m.objective_value(&x);
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    };
    combos(0, 0, n, total, &mut chosen, &mut consider);
    best.map(|b| sign * b)
}

impl MipModel {
    /// Feasibility ignoring integrality (for the LP oracle).
    fn assignment_feasible_continuous(&self, x: &[f64], tol: f64) -> bool {
        for (i, v) in self.vars.iter().enumerate() {
            if x[i] < v.lower - tol || x[i] > v.upper + tol {
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
}

fn arbitrary_lp() -> impl Strategy<Value = MipModel> {
    (
        1usize..=4,                          // vars
        0usize..=4,                          // rows
        any::<bool>(),                       // sense
        proptest::collection::vec(-5i32..=5, 4),
        proptest::collection::vec(1i32..=5, 4),
        proptest::collection::vec(
            (proptest::collection::vec(-3i32..=3, 4), 0usize..3, -4i32..=8),
            4,
        ),
    )
        .prop_map(|(n, m_rows, maximize, obj, ubs, rows)| {
            let mut m = lp(if maximize { Sense::Maximize } else { Sense::Minimize });
            for j in 0..n {
                let v = m.add_continuous(0.0, ubs[j] as f64, format!("x{j}"));
                m.set_objective_coef(v, obj[j] as f64);
            }
            for (coefs, sense, rhs) in rows.into_iter().take(m_rows) {
                let terms: Vec<(usize, f64)> = (0..n)
                    .map(|j| (j, coefs[j] as f64))
                    .filter(|&(_, c)| c != 0.0)
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                let sense = [RowSense::Le, RowSense::Ge, RowSense::Eq][sense];
                m.add_constraint(terms, sense, rhs as f64);
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]
    #[test]
    fn simplex_matches_vertex_enumeration(m in arbitrary_lp()) {
        let sol = lp_relax_solve(&m).unwrap();
        let oracle = vertex_oracle(&m);
        match (sol.status, oracle) {
            (SolveStatus::Optimal, Some(best)) => {
                prop_assert!(
                    (sol.objective - best).abs() < 1e-6,
                    "simplex {} oracle {}\n{}", sol.objective, best, m.write_lp()
                );
            }
            (SolveStatus::Infeasible, None) => {}
            (status, oracle) => {
                prop_assert!(false, "status {status:?} vs oracle {oracle:?}\n{}", m.write_lp());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// branch and bound vs exhaustive enumeration
// ---------------------------------------------------------------------------

fn knapsack() -> MipModel {
    let mut m = lp(Sense::Maximize);
    let x1 = m.add_binary("x1");
    let x2 = m.add_binary("x2");
    let x3 = m.add_binary("x3");
    m.set_objective_coef(x1, 8.0);
    m.set_objective_coef(x2, 5.0);
    m.set_objective_coef(x3, 4.0);
    m.add_constraint([(x1, 6.0), (x2, 4.0), (x3, 3.0)], RowSense::Le, 12.0);
    m
}

#[test]
fn knapsack_reaches_enumerated_optimum() {
    let m = knapsack();
    let bb = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
    assert_eq!(bb.status, SolveStatus::Optimal);
    assert!((bb.objective - 13.0).abs() < 1e-9, "got {}", bb.objective);
    let brute = brute_force_solve(&m, DEFAULT_MAX_BINARIES).unwrap();
    assert!((brute.objective - 13.0).abs() < 1e-9);
    assert!(bb.gap <= 1e-12);
}

#[test]
fn set_cover_minimization() {
    let mut m = lp(Sense::Minimize);
    let xs: Vec<usize> = (0..4).map(|i| m.add_binary(format!("x{i}"))).collect();
    for (i, c) in [3.0, 2.0, 4.0, 3.0].iter().enumerate() {
        m.set_objective_coef(xs[i], *c);
    }
    m.add_constraint([(xs[0], 1.0), (xs[2], 1.0)], RowSense::Ge, 1.0);
    m.add_constraint([(xs[0], 1.0), (xs[1], 1.0), (xs[3], 1.0)], RowSense::Ge, 1.0);
    m.add_constraint([(xs[1], 1.0), (xs[2], 1.0), (xs[3], 1.0)], RowSense::Ge, 1.0);
    let bb = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
    assert!((bb.objective - 5.0).abs() < 1e-9, "got {}", bb.objective);
}

#[test]
fn pure_lp_model_equals_relaxation() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, 4.0, "x");
    m.set_objective_coef(x, -1.0);
    m.add_constraint([(x, 1.0)], RowSense::Le, 2.5);
    let bb = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
    let relax = lp_relax_solve(&m).unwrap();
    assert!((bb.objective - relax.objective).abs() < 1e-9);
    assert_eq!(bb.nodes_explored, 1);
}

#[test]
fn infeasible_binary_model() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_binary("x");
    let y = m.add_binary("y");
    m.add_constraint([(x, 1.0), (y, 1.0)], RowSense::Ge, 3.0);
    assert_eq!(
        branch_and_bound_solve(&m, 0.0, None, None).unwrap().status,
        SolveStatus::Infeasible
    );
    assert_eq!(
        brute_force_solve(&m, DEFAULT_MAX_BINARIES).unwrap().status,
        SolveStatus::Infeasible
    );
}

#[test]
fn brute_force_refuses_large_models() {
    let mut m = lp(Sense::Minimize);
    for i in 0..25 {
        m.add_binary(format!("x{i}"));
    }
    match brute_force_solve(&m, DEFAULT_MAX_BINARIES) {
        Err(SolveError::TooManyBinaries { limit: 24, actual: 25 }) => {}
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn brute_force_without_binaries_is_lp() {
    let mut m = lp(Sense::Minimize);
    let x = m.add_continuous(0.0, 10.0, "x");
    m.set_objective_coef(x, 1.0);
    m.add_constraint([(x, 1.0)], RowSense::Ge, 3.0);
    let a = brute_force_solve(&m, DEFAULT_MAX_BINARIES).unwrap();
    let b = lp_relax_solve(&m).unwrap();
    assert!((a.objective - b.objective).abs() < 1e-12);
}

#[test]
fn node_limit_is_honored() {
    let m = knapsack();
    let sol = branch_and_bound_solve(&m, 0.0, Some(0), None).unwrap();
    assert_eq!(sol.status, SolveStatus::NodeLimit);
}

fn arbitrary_micro_mip() -> impl Strategy<Value = MipModel> {
    (
        1usize..=8,  // binaries
        0usize..=2,  // continuous
        1usize..=12, // rows
        any::<bool>(),
        proptest::collection::vec(-5i32..=5, 10),
        proptest::collection::vec(
            (proptest::collection::vec(-3i32..=3, 10), 0usize..3, -3i32..=9),
            12,
        ),
    )
        .prop_map(|(nb, nc, nr, maximize, obj, rows)| {
            let mut m = lp(if maximize { Sense::Maximize } else { Sense::Minimize });
            for i in 0..nb {
                let v = m.add_binary(format!("b{i}"));
                m.set_objective_coef(v, obj[i] as f64);
            }
            for i in 0..nc {
                let v = m.add_continuous(0.0, 3.0, format!("c{i}"));
                m.set_objective_coef(v, obj[nb + i] as f64);
            }
            let n = nb + nc;
            for (coefs, sense, rhs) in rows.into_iter().take(nr) {
                let terms: Vec<(usize, f64)> = (0..n)
                    .map(|j| (j, coefs[j] as f64))
                    .filter(|&(_, c)| c != 0.0)
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                m.add_constraint(terms, [RowSense::Le, RowSense::Ge, RowSense::Eq][sense], rhs as f64);
            }
            m
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn branch_and_bound_equals_brute_force(m in arbitrary_micro_mip()) {
        let bb = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
        let brute = brute_force_solve(&m, DEFAULT_MAX_BINARIES).unwrap();
        match (bb.status, brute.status) {
            (SolveStatus::Optimal, SolveStatus::Optimal) => {
                prop_assert!(
                    (bb.objective - brute.objective).abs() < 1e-6,
                    "bb {} brute {}\n{}", bb.objective, brute.objective, m.write_lp()
                );
                // sandwich: relaxation bounds the integer optimum
                let relax = lp_relax_solve(&m).unwrap();
                if relax.status == SolveStatus::Optimal {
                    match m.sense {
                        Sense::Minimize => prop_assert!(relax.objective <= brute.objective + 1e-6),
                        Sense::Maximize => prop_assert!(relax.objective >= brute.objective - 1e-6),
                    }
                }
                prop_assert!(m.assignment_feasible(&bb.assignment, 1e-5));
            }
            (SolveStatus::Infeasible, SolveStatus::Infeasible) => {}
            (a, b) => prop_assert!(false, "status mismatch {a:?} vs {b:?}\n{}", m.write_lp()),
        }
    }

    #[test]
    fn solver_is_deterministic(m in arbitrary_micro_mip()) {
        let a = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
        let b = branch_and_bound_solve(&m, 0.0, None, None).unwrap();
        prop_assert_eq!(a.nodes_explored, b.nodes_explored);
        if a.status == SolveStatus::Optimal {
            prop_assert_eq!(a.assignment, b.assignment);
        }
    }
}

#[test]
fn lp_dump_has_all_sections() {
    let m = knapsack();
    let dump = m.write_lp();
    for section in ["Maximize", "Subject To", "Bounds", "Binaries", "End"] {
        assert!(dump.contains(section), "missing {section}:\n{dump}");
    }
    assert!(dump.contains("x1"));
}
