//! Time-expanded network: timed nodes per (terminal, step) plus one
//! source/sink node per depot, connected by service, relocation, wait and
//! pull-out/pull-in arcs. Immutable once built.

use crate::instance::{Instance, TraceEntry};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("no relocation option provides the {direction} travel time between depot {depot} and terminal {terminal}")]
    MissingDepotLink {
        depot: String,
        terminal: String,
        direction: &'static str,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Timed { terminal: usize, t: u32 },
    DepotSource { terminal: usize },
    DepotSink { terminal: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Service,
    Wait,
    Relocation,
    PullOut,
    PullIn,
}

impl ArcKind {
    pub fn label(self) -> &'static str {
        match self {
            ArcKind::Service => "service",
            ArcKind::Wait => "wait",
            ArcKind::Relocation => "relocation",
            ArcKind::PullOut => "pull_out",
            ArcKind::PullIn => "pull_in",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Arc {
    pub kind: ArcKind,
    pub from: NodeId,
    pub to: NodeId,
    pub from_terminal: usize,
    pub to_terminal: usize,
    /// None at a depot source endpoint.
    pub from_t: Option<u32>,
    /// None at a depot sink endpoint.
    pub to_t: Option<u32>,
    pub cost: f64,
    /// (grid, period) pairs sensed while traversing this arc.
    pub coverage: Vec<(usize, usize)>,
    pub trip: Option<usize>,
    pub relocation: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub nodes: Vec<NodeKind>,
    pub arcs: Vec<Arc>,
    /// Terminal indices flagged as depots, in terminal order.
    pub depots: Vec<usize>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    /// Pairs (a, b) of relocation arcs where b departs from a's head the
    /// moment a arrives and returns to a's tail; a bus may use at most one.
    pub immediate_return_pairs: Vec<(usize, usize)>,
    n_terminals: usize,
    n_points: usize,
    start: u32,
}

impl Network {
    pub fn timed_node(&self, terminal: usize, t: u32) -> NodeId {
        debug_assert!(t >= self.start);
        NodeId(terminal * self.n_points + (t - self.start) as usize)
    }

    pub fn depot_source(&self, depot_pos: usize) -> NodeId {
        NodeId(self.n_terminals * self.n_points + depot_pos)
    }

    pub fn depot_sink(&self, depot_pos: usize) -> NodeId {
        NodeId(self.n_terminals * self.n_points + self.depots.len() + depot_pos)
    }

    pub fn arc_ids(&self, kind: ArcKind) -> impl Iterator<Item = usize> + '_ {
        self.arcs
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.kind == kind)
            .map(|(i, _)| i)
    }

    pub fn service_arcs(&self) -> Vec<usize> {
        self.arc_ids(ArcKind::Service).collect()
    }

    pub fn count(&self, kind: ArcKind) -> usize {
        self.arc_ids(kind).count()
    }

    /// Debug dump of the arc list.
    pub fn arcs_csv(&self) -> String {
        let mut out = String::from("kind,from_terminal,from_t,to_terminal,to_t,cost,n_covered_pairs\n");
        let fmt_t = |t: Option<u32>| t.map(|v| v.to_string()).unwrap_or_default();
        for a in &self.arcs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                a.kind.label(),
                a.from_terminal,
                fmt_t(a.from_t),
                a.to_terminal,
                fmt_t(a.to_t),
                crate::report::fmt_money(a.cost),
                a.coverage.len()
            ));
        }
        out
    }
}

/// Periods covered by a traced movement from `from_t` to `to_t`: each trace
/// entry occupies the interval from its own entry time to the next entry (or
/// arrival), and is covered in every period that interval intersects.
pub fn trace_coverage(
    trace: &[TraceEntry],
    from_t: f64,
    to_t: f64,
    inst: &Instance,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let span = to_t - from_t;
    let delta = inst.sensing.delta_k as f64;
    let start = inst.horizon.start as f64;
    let periods = inst.periods();
    for (i, e) in trace.iter().enumerate() {
        let enter = from_t + e.frac * span;
        let leave = match trace.get(i + 1) {
            Some(next) => from_t + next.frac * span,
            None => to_t,
        };
        if leave <= enter {
            continue;
        }
        let k_lo = inst.period_of(enter);
        let f = (leave - start) / delta;
        let k_hi = if (f - f.round()).abs() < 1e-9 {
            (f.round() as i64 - 1).max(0) as usize
        } else {
            f.floor() as usize
        };
        for k in k_lo..=k_hi.min(periods - 1) {
            out.push((e.grid, k));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Coverage set of one arc: service and relocation arcs inherit their trip's
/// or option's grid trace; wait and pull arcs sense nothing.
pub fn arc_coverage(arc: &Arc, inst: &Instance) -> Vec<(usize, usize)> {
    let (from_t, to_t) = match (arc.from_t, arc.to_t) {
        (Some(a), Some(b)) => (a as f64, b as f64),
        _ => return Vec::new(),
    };
    let trace = match arc.kind {
        ArcKind::Service => arc.trip.map(|t| &inst.trips[t].grid_trace),
        ArcKind::Relocation => arc.relocation.map(|r| &inst.relocations[r].grid_trace),
        _ => None,
    };
    match trace {
        Some(trace) => trace_coverage(trace, from_t, to_t, inst),
        None => Vec::new(),
    }
}

pub fn build_network(inst: &Instance) -> Result<Network, NetworkError> {
    let n_terminals = inst.terminals.len();
    let n_points = inst.n_points();
    let depots = inst.depots();
    let (start, end) = (inst.horizon.start, inst.horizon.end);

    let mut nodes = Vec::with_capacity(n_terminals * n_points + 2 * depots.len());
    for terminal in 0..n_terminals {
        for t in start..=end {
            nodes.push(NodeKind::Timed { terminal, t });
        }
    }
    for &d in &depots {
        nodes.push(NodeKind::DepotSource { terminal: d });
    }
    for &d in &depots {
        nodes.push(NodeKind::DepotSink { terminal: d });
    }

    let mut net = Network {
        nodes,
        arcs: Vec::new(),
        depots,
        out_arcs: Vec::new(),
        in_arcs: Vec::new(),
        immediate_return_pairs: Vec::new(),
        n_terminals,
        n_points,
        start,
    };

    for (idx, trip) in inst.trips.iter().enumerate() {
        let arc = Arc {
            kind: ArcKind::Service,
            from: net.timed_node(trip.from, trip.depart),
            to: net.timed_node(trip.to, trip.arrive),
            from_terminal: trip.from,
            to_terminal: trip.to,
            from_t: Some(trip.depart),
            to_t: Some(trip.arrive),
            cost: inst.travel_cost(trip.arrive - trip.depart),
            coverage: trace_coverage(
                &trip.grid_trace,
                trip.depart as f64,
                trip.arrive as f64,
                inst,
            ),
            trip: Some(idx),
            relocation: None,
        };
        net.arcs.push(arc);
    }

    for terminal in 0..n_terminals {
        for t in start..end {
            net.arcs.push(Arc {
                kind: ArcKind::Wait,
                from: net.timed_node(terminal, t),
                to: net.timed_node(terminal, t + 1),
                from_terminal: terminal,
                to_terminal: terminal,
                from_t: Some(t),
                to_t: Some(t + 1),
                cost: 0.0,
                coverage: Vec::new(),
                trip: None,
                relocation: None,
            });
        }
    }

    for (idx, opt) in inst.relocations.iter().enumerate() {
        if opt.duration == 0 {
            // zero-duration options only supply depot travel times; a timed
            // arc must move forward in time
            continue;
        }
        let mut t = start;
        while t + opt.duration <= end {
            net.arcs.push(Arc {
                kind: ArcKind::Relocation,
                from: net.timed_node(opt.from, t),
                to: net.timed_node(opt.to, t + opt.duration),
                from_terminal: opt.from,
                to_terminal: opt.to,
                from_t: Some(t),
                to_t: Some(t + opt.duration),
                cost: inst.costs.relocation_fixed + inst.travel_cost(opt.duration),
                coverage: trace_coverage(
                    &opt.grid_trace,
                    t as f64,
                    (t + opt.duration) as f64,
                    inst,
                ),
                trip: None,
                relocation: Some(idx),
            });
            t += 1;
        }
    }

    let link = |from: usize, to: usize, direction: &'static str| {
        inst.link_duration(from, to)
            .ok_or_else(|| NetworkError::MissingDepotLink {
                depot: inst.terminals[if direction == "outbound" { from } else { to }]
                    .id
                    .clone(),
                terminal: inst.terminals[if direction == "outbound" { to } else { from }]
                    .id
                    .clone(),
                direction,
            })
    };

    for (pos, &d) in net.depots.clone().iter().enumerate() {
        for terminal in 0..n_terminals {
            let dur = link(d, terminal, "outbound")?;
            net.arcs.push(Arc {
                kind: ArcKind::PullOut,
                from: net.depot_source(pos),
                to: net.timed_node(terminal, start),
                from_terminal: d,
                to_terminal: terminal,
                from_t: None,
                to_t: Some(start),
                cost: inst.costs.fixed_bus + inst.travel_cost(dur),
                coverage: Vec::new(),
                trip: None,
                relocation: None,
            });
        }
    }
    for (pos, &d) in net.depots.clone().iter().enumerate() {
        for terminal in 0..n_terminals {
            let dur = link(terminal, d, "inbound")?;
            net.arcs.push(Arc {
                kind: ArcKind::PullIn,
                from: net.timed_node(terminal, end),
                to: net.depot_sink(pos),
                from_terminal: terminal,
                to_terminal: d,
                from_t: Some(end),
                to_t: None,
                cost: inst.travel_cost(dur),
                coverage: Vec::new(),
                trip: None,
                relocation: None,
            });
        }
    }

    finish(&mut net);
    Ok(net)
}

/// Copy of the network keeping only the arcs the predicate accepts; node ids
/// are preserved, adjacency and return pairs are rebuilt.
pub fn filter_arcs(net: &Network, keep: impl Fn(&Arc) -> bool) -> Network {
    let mut out = net.clone();
    out.arcs = net.arcs.iter().filter(|a| keep(a)).cloned().collect();
    finish(&mut out);
    out
}

/// Copy of the network with every relocation arc that joins terminals of
/// different lines removed. Pull arcs stay, so a bus may still start on any
/// line; it just cannot hop lines mid-horizon.
pub fn restrict_single_line(net: &Network, inst: &Instance) -> Network {
    let line_terminals = inst.line_terminals();
    let same_line = |a: usize, b: usize| {
        line_terminals
            .iter()
            .any(|terms| terms.contains(&a) && terms.contains(&b))
    };
    filter_arcs(net, |a| {
        a.kind != ArcKind::Relocation || same_line(a.from_terminal, a.to_terminal)
    })
}

fn finish(net: &mut Network) {
    net.out_arcs = vec![Vec::new(); net.nodes.len()];
    net.in_arcs = vec![Vec::new(); net.nodes.len()];
    for (i, a) in net.arcs.iter().enumerate() {
        net.out_arcs[a.from.0].push(i);
        net.in_arcs[a.to.0].push(i);
    }
    net.immediate_return_pairs.clear();
    for (i, a) in net.arcs.iter().enumerate() {
        if a.kind != ArcKind::Relocation {
            continue;
        }
        for &j in &net.out_arcs[a.to.0] {
            let b = &net.arcs[j];
            if b.kind == ArcKind::Relocation && b.to_terminal == a.from_terminal {
                net.immediate_return_pairs.push((i, j));
            }
        }
    }
}
