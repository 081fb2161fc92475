//! Maps semantic model keys (bus, arc, depot, grid/period) to variable ids.

use crate::instance::Instance;
use crate::network::Network;
use std::collections::BTreeMap;

/// Variable layout of a per-bus model. `x` and `h` are present only in the
/// formulations that declare them; `z` holds ids for covered arcs only.
#[derive(Debug, Clone)]
pub struct VarRegistry {
    pub n_buses: usize,
    /// 1 if bus b carries a sensor (full model only).
    pub x: Vec<usize>,
    /// [bus][depot position] -> v variable.
    pub v: Vec<Vec<usize>>,
    /// [bus][arc] -> y variable.
    pub y: Vec<Vec<usize>>,
    /// [bus][arc] -> z variable for arcs with non-empty coverage.
    pub z: Vec<Vec<Option<usize>>>,
    /// [arc] -> h variable on service arcs (IB stage only).
    pub h: Vec<Option<usize>>,
    /// [grid][period] -> r variable, empty when the model carries no sensing.
    pub r: Vec<Vec<usize>>,
    /// Buses without an x variable are all sensors or all not.
    pub fallback_is_ib: bool,
}

impl VarRegistry {
    pub fn is_ib(&self, bus: usize, assignment: &[f64]) -> bool {
        if self.x.is_empty() {
            self.fallback_is_ib
        } else {
            assignment[self.x[bus]] > 0.5
        }
    }

    /// Coverage counts implied by the binary assignment: incidences of
    /// instrumented buses over arcs, per (grid, period).
    pub fn counts_from_assignment(
        &self,
        assignment: &[f64],
        net: &Network,
    ) -> BTreeMap<(usize, usize), u32> {
        let mut q = BTreeMap::new();
        for b in 0..self.n_buses {
            if !self.is_ib(b, assignment) {
                continue;
            }
            for (arc, &yv) in self.y[b].iter().enumerate() {
                if assignment[yv] > 0.5 {
                    for &pair in &net.arcs[arc].coverage {
                        *q.entry(pair).or_insert(0) += 1;
                    }
                }
            }
        }
        q
    }

    /// Rewrites the sensing-side variables of a solved assignment to their
    /// implied exact values: z becomes x*y and each r becomes the envelope
    /// value of its coverage count. Objective-neutral (r only ever carries a
    /// non-positive cost pushing it up; a zero-weight r is free).
    pub fn tighten_sensing(&self, assignment: &mut [f64], net: &Network, inst: &Instance) {
        for b in 0..self.n_buses {
            for (arc, zv) in self.z[b].iter().enumerate() {
                if let Some(zv) = *zv {
                    let xv = if self.x.is_empty() {
                        1.0
                    } else {
                        assignment[self.x[b]].round()
                    };
                    assignment[zv] = xv * assignment[self.y[b][arc]].round();
                }
            }
        }
        if self.r.is_empty() {
            return;
        }
        let q = self.counts_from_assignment(assignment, net);
        for (g, row) in self.r.iter().enumerate() {
            for (k, &rv) in row.iter().enumerate() {
                let count = q.get(&(g, k)).copied().unwrap_or(0);
                assignment[rv] = inst.pwl.eval(count as f64);
            }
        }
    }
}
