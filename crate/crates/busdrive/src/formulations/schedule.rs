//! Per-bus trip chains extracted from solved models, and their post-hoc
//! verification against the operational constraints.

use super::{FormulationError, VarRegistry};
use crate::instance::{Instance, MONEY_TOL};
use crate::mip::Solution;
use crate::network::{ArcKind, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub bus: usize,
    pub is_ib: bool,
    /// Arc chain from a depot source to a depot sink.
    pub arcs: Vec<usize>,
    pub cost: f64,
}

impl Schedule {
    pub fn relocation_count(&self, net: &Network) -> usize {
        self.arcs
            .iter()
            .filter(|&&a| net.arcs[a].kind == ArcKind::Relocation)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScheduleTotals {
    pub buses: usize,
    pub fixed_cost: f64,
    pub operational_cost: f64,
    pub total_cost: f64,
    pub relocations: usize,
}

impl ScheduleTotals {
    pub fn from_schedules(schedules: &[Schedule], net: &Network, inst: &Instance) -> Self {
        let buses = schedules.len();
        let total_cost: f64 = schedules.iter().map(|s| s.cost).sum();
        let fixed_cost = buses as f64 * inst.costs.fixed_bus;
        let relocations = schedules.iter().map(|s| s.relocation_count(net)).sum();
        ScheduleTotals {
            buses,
            fixed_cost,
            operational_cost: total_cost - fixed_cost,
            total_cost,
            relocations,
        }
    }
}

/// Follows each bus's selected arcs from its depot source. Undispatched
/// buses are dropped; anything that is not a simple forward path is an
/// integrity error.
pub fn extract_schedules(
    sol: &Solution,
    reg: &VarRegistry,
    net: &Network,
) -> Result<Vec<Schedule>, FormulationError> {
    let mut out = Vec::new();
    if !sol.has_assignment() {
        return Ok(out);
    }
    for b in 0..reg.n_buses {
        let taken = |arc: usize| sol.assignment[reg.y[b][arc]] > 0.5;
        let mut starts: Vec<usize> = net
            .arc_ids(ArcKind::PullOut)
            .filter(|&a| taken(a))
            .collect();
        if starts.is_empty() {
            continue;
        }
        if starts.len() > 1 {
            return Err(FormulationError::BrokenPath {
                bus: b,
                detail: format!("{} pull-out arcs selected", starts.len()),
            });
        }
        let mut arcs = vec![starts.pop().unwrap()];
        let mut node = net.arcs[arcs[0]].to;
        loop {
            if matches!(net.nodes[node.0], crate::network::NodeKind::DepotSink { .. }) {
                break;
            }
            let next: Vec<usize> = net.out_arcs[node.0]
                .iter()
                .copied()
                .filter(|&a| taken(a))
                .collect();
            if next.len() != 1 {
                return Err(FormulationError::BrokenPath {
                    bus: b,
                    detail: format!(
                        "node {:?} has {} selected outgoing arcs",
                        net.nodes[node.0],
                        next.len()
                    ),
                });
            }
            arcs.push(next[0]);
            node = net.arcs[next[0]].to;
        }
        let cost = arcs.iter().map(|&a| net.arcs[a].cost).sum();
        out.push(Schedule {
            bus: b,
            is_ib: reg.is_ib(b, &sol.assignment),
            arcs,
            cost,
        });
    }
    Ok(out)
}

/// Checks a schedule set against the operational constraints: full trip
/// coverage, path integrity, matching pull-out/pull-in depot, sensor-fleet
/// size and reported costs. Violations are data, not errors.
pub fn verify_schedule(schedules: &[Schedule], net: &Network, inst: &Instance) -> Vec<String> {
    let mut v = Vec::new();

    for id in net.arc_ids(ArcKind::Service) {
        let covered = schedules.iter().any(|s| s.arcs.contains(&id));
        if !covered {
            let arc = &net.arcs[id];
            v.push(format!(
                "uncovered trip {} -> {} departing {}",
                inst.terminals[arc.from_terminal].id,
                inst.terminals[arc.to_terminal].id,
                arc.from_t.unwrap_or_default()
            ));
        }
    }

    for s in schedules {
        let label = format!("bus {}", s.bus);
        if s.arcs.is_empty() {
            v.push(format!("{label}: empty schedule"));
            continue;
        }
        let first = &net.arcs[s.arcs[0]];
        let last = &net.arcs[*s.arcs.last().unwrap()];
        if first.kind != ArcKind::PullOut {
            v.push(format!("{label}: does not start with a pull-out"));
        }
        if last.kind != ArcKind::PullIn {
            v.push(format!("{label}: does not end with a pull-in"));
        }
        for w in s.arcs.windows(2) {
            let (a, b) = (&net.arcs[w[0]], &net.arcs[w[1]]);
            if a.to != b.from {
                v.push(format!("{label}: disconnected at arc {}", w[1]));
            }
            if let (Some(at), Some(bt)) = (a.to_t, b.to_t) {
                if bt <= at {
                    v.push(format!("{label}: time does not advance at arc {}", w[1]));
                }
            }
        }
        if first.kind == ArcKind::PullOut
            && last.kind == ArcKind::PullIn
            && first.from_terminal != last.to_terminal
        {
            v.push(format!(
                "{label}: pulled out of {} but returned to {}",
                inst.terminals[first.from_terminal].id, inst.terminals[last.to_terminal].id
            ));
        }
        let cost: f64 = s.arcs.iter().map(|&a| net.arcs[a].cost).sum();
        if (cost - s.cost).abs() > MONEY_TOL {
            v.push(format!(
                "{label}: reported cost {} but arcs sum to {}",
                s.cost, cost
            ));
        }
    }

    let ib_count = schedules.iter().filter(|s| s.is_ib).count();
    if ib_count > inst.fleet.max_ib {
        v.push(format!(
            "{} instrumented buses exceed the limit {}",
            ib_count, inst.fleet.max_ib
        ));
    }

    v
}

/// Export consumed by the CLI: one row per (bus, arc).
pub fn schedules_csv(schedules: &[Schedule], net: &Network, inst: &Instance) -> String {
    let mut out =
        String::from("bus_id,is_ib,seq,arc_kind,from_terminal,from_t,to_terminal,to_t,cost\n");
    let fmt_t = |t: Option<u32>| t.map(|v| v.to_string()).unwrap_or_default();
    for s in schedules {
        for (seq, &a) in s.arcs.iter().enumerate() {
            let arc = &net.arcs[a];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.bus,
                s.is_ib,
                seq,
                arc.kind.label(),
                inst.terminals[arc.from_terminal].id,
                fmt_t(arc.from_t),
                inst.terminals[arc.to_terminal].id,
                fmt_t(arc.to_t),
                crate::report::fmt_money(arc.cost)
            ));
        }
    }
    out
}
