//! Deterministic branch-and-bound over the binary variables: best-bound node
//! selection (ties broken by depth, then insertion order) and most-fractional
//! branching (ties broken by lowest variable id).

use super::{relative_gap, simplex, MipModel, Sense, Solution, SolveError, SolveStatus, VarKind};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

const INT_TOL: f64 = 1e-6;
const IMPROVE_TOL: f64 = 1e-9;

struct NodeRec {
    parent: Option<usize>,
    /// Bound override introduced by this node.
    var: usize,
    lower: f64,
    upper: f64,
}

struct HeapEntry {
    bound: f64,
    depth: usize,
    seq: u64,
    node: Option<usize>,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // BinaryHeap pops the maximum: rank "better" entries greater. Better =
    // smaller bound, then greater depth, then earlier insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn branch_and_bound_solve(
    model: &MipModel,
    mipgap: f64,
    node_limit: Option<usize>,
    time_limit: Option<Duration>,
) -> Result<Solution, SolveError> {
    model.validate()?;
    let started = Instant::now();
    let sign = match model.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let root_bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lower, v.upper)).collect();

    let mut arena: Vec<NodeRec> = Vec::new();
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        node: None,
    });
    let mut next_seq = 1u64;

    let mut incumbent: Option<(f64, Vec<f64>)> = None; // internal objective
    let mut nodes_explored = 0usize;
    let mut limit_status: Option<SolveStatus> = None;
    let mut bound_at_stop = f64::NEG_INFINITY;

    while let Some(entry) = heap.pop() {
        bound_at_stop = entry.bound;
        if let Some((best, _)) = &incumbent {
            if entry.bound >= best - IMPROVE_TOL {
                // best-bound order: nothing left can improve
                bound_at_stop = *best;
                break;
            }
            let gap = relative_gap(*best, entry.bound);
            if gap <= mipgap {
                limit_status = Some(if gap <= 1e-12 {
                    SolveStatus::Optimal
                } else {
                    SolveStatus::GapReached
                });
                break;
            }
        }
        if let Some(limit) = node_limit {
            if nodes_explored >= limit {
                limit_status = Some(SolveStatus::NodeLimit);
                break;
            }
        }
        if let Some(limit) = time_limit {
            if started.elapsed() >= limit {
                limit_status = Some(SolveStatus::TimeLimit);
                break;
            }
        }

        // materialize this node's bounds
        let mut bounds = root_bounds.clone();
        let mut cursor = entry.node;
        while let Some(ix) = cursor {
            let rec = &arena[ix];
            let b = &mut bounds[rec.var];
            b.0 = b.0.max(rec.lower);
            b.1 = b.1.min(rec.upper);
            cursor = rec.parent;
        }

        nodes_explored += 1;
        let outcome = simplex::solve_with_bounds(model, &bounds)?;
        let (x, obj_user) = match outcome {
            simplex::Outcome::Infeasible => continue,
            simplex::Outcome::Unbounded => {
                return Ok(Solution {
                    status: SolveStatus::Unbounded,
                    assignment: Vec::new(),
                    objective: f64::NAN,
                    best_bound: f64::NAN,
                    gap: f64::NAN,
                    nodes_explored,
                });
            }
            simplex::Outcome::Optimal { x, objective } => (x, objective),
        };
        let obj_int = sign * obj_user;
        if let Some((best, _)) = &incumbent {
            if obj_int >= best - IMPROVE_TOL {
                continue;
            }
        }

        // most fractional binary, ties by lowest id
        let mut branch: Option<(usize, f64)> = None;
        for (j, v) in model.vars.iter().enumerate() {
            if v.kind != VarKind::Binary {
                continue;
            }
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > INT_TOL && branch.map_or(true, |(_, d)| dist > d + 1e-12) {
                branch = Some((j, dist));
            }
        }

        match branch {
            None => {
                let mut rounded = x;
                for (j, v) in model.vars.iter().enumerate() {
                    if v.kind == VarKind::Binary {
                        rounded[j] = rounded[j].round();
                    }
                }
                incumbent = Some((obj_int, rounded));
            }
            Some((var, _)) => {
                for (lo, hi) in [(0.0, 0.0), (1.0, 1.0)] {
                    arena.push(NodeRec {
                        parent: entry.node,
                        var,
                        lower: lo,
                        upper: hi,
                    });
                    heap.push(HeapEntry {
                        bound: obj_int,
                        depth: entry.depth + 1,
                        seq: next_seq,
                        node: Some(arena.len() - 1),
                    });
                    next_seq += 1;
                }
            }
        }
    }

    let status_when_done = limit_status.unwrap_or(SolveStatus::Optimal);
    match incumbent {
        Some((obj_int, x)) => {
            let global_bound = if heap.is_empty() && limit_status.is_none() {
                obj_int
            } else {
                bound_at_stop.min(obj_int)
            };
            let objective = sign * obj_int;
            let best_bound = sign * global_bound;
            Ok(Solution {
                status: status_when_done,
                assignment: x,
                objective,
                best_bound,
                gap: relative_gap(obj_int, global_bound),
                nodes_explored,
            })
        }
        None => Ok(Solution {
            status: if limit_status.is_some() {
                status_when_done
            } else {
                SolveStatus::Infeasible
            },
            assignment: Vec::new(),
            objective: f64::NAN,
            best_bound: f64::NAN,
            gap: f64::NAN,
            nodes_explored,
        }),
    }
}
