//! Sensor-to-line assignment as a set covering problem: maximize the number
//! of grids touched by at least one instrumented line.

use super::FormulationError;
use crate::instance::Instance;
use crate::mip::{branch_and_bound_solve, MipModel, RowSense, Sense};

/// Deterministic tie-break: any coverage-neutral assignment is discouraged
/// with a perturbation far below the unit value of one covered grid, which
/// also prefers lower line indices among symmetric optima.
const TIE_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SetCoverRegistry {
    /// [sensor][line] -> assignment variable.
    pub assign: Vec<Vec<usize>>,
    /// [grid] -> coverage indicator.
    pub covered: Vec<usize>,
}

pub fn build_m1_set_cover(inst: &Instance, sensor_count: usize) -> (MipModel, SetCoverRegistry) {
    let footprints = inst.line_grid_footprints();
    let n_lines = inst.lines.len();
    let mut m = MipModel::new(Sense::Maximize);
    let assign: Vec<Vec<usize>> = (0..sensor_count)
        .map(|s| {
            (0..n_lines)
                .map(|r| {
                    let var = m.add_binary(format!("assign[{s},{r}]"));
                    m.set_objective_coef(var, -TIE_EPS * (r + 1) as f64);
                    var
                })
                .collect()
        })
        .collect();
    let covered: Vec<usize> = (0..inst.grids.len())
        .map(|g| {
            let var = m.add_binary(format!("covered[{g}]"));
            m.set_objective_coef(var, 1.0);
            var
        })
        .collect();

    for s in 0..sensor_count {
        m.add_constraint(assign[s].iter().map(|&v| (v, 1.0)), RowSense::Le, 1.0);
    }
    for g in 0..inst.grids.len() {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (s, row) in assign.iter().enumerate() {
            let _ = s;
            for (r, &var) in row.iter().enumerate() {
                if footprints[r].contains(&g) {
                    terms.push((var, 1.0));
                }
            }
        }
        terms.push((covered[g], -1.0));
        m.add_constraint(terms, RowSense::Ge, 0.0);
    }
    (m, SetCoverRegistry { assign, covered })
}

#[derive(Debug, Clone, PartialEq)]
pub struct M1Selection {
    /// Line chosen for each sensor; None when no line adds coverage.
    pub line_of_sensor: Vec<Option<usize>>,
    pub covered_grids: usize,
}

pub fn solve_m1_set_cover(
    inst: &Instance,
    sensor_count: usize,
) -> Result<M1Selection, FormulationError> {
    let (model, reg) = build_m1_set_cover(inst, sensor_count);
    let sol = branch_and_bound_solve(&model, 0.0, None, None)?;
    if !sol.has_assignment() {
        return Err(FormulationError::NoSolution { status: sol.status });
    }
    let line_of_sensor = reg
        .assign
        .iter()
        .map(|row| row.iter().position(|&v| sol.assignment[v] > 0.5))
        .collect();
    let covered_grids = reg
        .covered
        .iter()
        .filter(|&&v| sol.assignment[v] > 0.5)
        .count();
    Ok(M1Selection {
        line_of_sensor,
        covered_grids,
    })
}
