//! Problem instance: terminals, lines, timetabled trips, relocation options,
//! sensing grids and weights, costs and fleet limits.
//!
//! Instances are value types: once constructed (and validated) they are
//! immutable and safe to share across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Comparison tolerance for money and objective values.
pub const MONEY_TOL: f64 = 1e-6;

/// Tolerance for the weight-normalization invariant.
pub const WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid instance: {}", violations.join("; "))]
    Invalid { violations: Vec<String> },
}

/// Planning horizon over discrete time steps `start..=end` (inclusive),
/// each step lasting `step_minutes` minutes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub start: u32,
    pub end: u32,
    pub step_minutes: u32,
}

impl Horizon {
    /// Number of discrete time points in the horizon.
    pub fn n_points(&self) -> usize {
        (self.end - self.start + 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub id: String,
    pub is_depot: bool,
    pub name: Option<String>,
}

/// One entry of a grid trace: the bus enters `grid` once the given fraction
/// of the arc's travel time has elapsed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub grid: usize,
    pub frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimetabledTrip {
    pub line: usize,
    pub from: usize,
    pub to: usize,
    pub depart: u32,
    pub arrive: u32,
    pub grid_trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelocationOption {
    pub from: usize,
    pub to: usize,
    pub duration: u32,
    pub grid_trace: Vec<TraceEntry>,
}

/// Weight specification for one grid, prior to global normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// Time-invariant weight, broadcast uniformly over all sensing periods.
    Uniform(f64),
    /// One weight per sensing period.
    PerPeriod(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub id: String,
    pub weight: WeightSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingSpec {
    /// Period length in time steps.
    pub delta_k: u32,
    /// Derived period count: `n_points / delta_k`.
    pub periods: usize,
}

/// Concave piecewise-linear envelope given as affine segments; evaluated as
/// the minimum over segments so the reported value always matches the LP rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConcave {
    pub segments: Vec<(f64, f64)>,
}

impl PiecewiseConcave {
    /// Three-segment approximation of sqrt(q): q on [0,1), 0.366q+0.634 on
    /// [1,3), constant 1.732 beyond.
    pub fn default_sqrt() -> Self {
        PiecewiseConcave {
            segments: vec![(1.0, 0.0), (0.366, 0.634), (0.0, 1.732)],
        }
    }

    /// Envelope value: min over segments of `m*q + c`.
    pub fn eval(&self, q: f64) -> f64 {
        self.segments
            .iter()
            .map(|&(m, c)| m * q + c)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.segments.is_empty() {
            v.push("pwl: must have at least one segment".into());
            return v;
        }
        for w in self.segments.windows(2) {
            if w[1].0 >= w[0].0 {
                v.push(format!(
                    "pwl: slopes must be strictly decreasing ({} then {})",
                    w[0].0, w[1].0
                ));
            }
        }
        if self.segments.iter().any(|&(m, _)| m < 0.0) {
            v.push("pwl: slopes must be non-negative".into());
        }
        if self.segments[0].1.abs() > 1e-12 {
            v.push(format!(
                "pwl: first segment must pass through the origin (intercept {})",
                self.segments[0].1
            ));
        }
        if self.segments.iter().skip(1).any(|&(_, c)| c < 0.0) {
            v.push("pwl: intercepts must be non-negative".into());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    /// Fixed cost per dispatched bus (charged on the pull-out arc).
    pub fixed_bus: f64,
    /// Travel cost per minute.
    pub per_minute: f64,
    /// Fixed surcharge per relocation arc.
    pub relocation_fixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub total: usize,
    pub max_ib: usize,
    pub ib_exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub horizon: Horizon,
    pub terminals: Vec<Terminal>,
    /// Distinct line ids, in order of first appearance in the trip list.
    pub lines: Vec<String>,
    pub trips: Vec<TimetabledTrip>,
    pub relocations: Vec<RelocationOption>,
    pub grids: Vec<GridCell>,
    pub sensing: SensingSpec,
    pub pwl: PiecewiseConcave,
    pub costs: CostSpec,
    pub fleet: FleetSpec,
    /// Objective weight on the sensing score.
    pub delta: f64,
    /// Normalized weights mu[grid][period]; sums to 1 over all pairs.
    pub mu: Vec<Vec<f64>>,
}

impl Instance {
    pub fn n_points(&self) -> usize {
        self.horizon.n_points()
    }

    pub fn periods(&self) -> usize {
        self.sensing.periods
    }

    /// Sensing period containing a (possibly fractional) time point.
    pub fn period_of(&self, t: f64) -> usize {
        let k = ((t - self.horizon.start as f64) / self.sensing.delta_k as f64).floor();
        (k.max(0.0) as usize).min(self.sensing.periods.saturating_sub(1))
    }

    pub fn depots(&self) -> Vec<usize> {
        (0..self.terminals.len())
            .filter(|&i| self.terminals[i].is_depot)
            .collect()
    }

    pub fn travel_cost(&self, duration_steps: u32) -> f64 {
        self.costs.per_minute * (duration_steps * self.horizon.step_minutes) as f64
    }

    /// Shortest relocation duration registered for the ordered pair, if any.
    /// Same-terminal movements take zero time without an explicit option.
    pub fn link_duration(&self, from: usize, to: usize) -> Option<u32> {
        if from == to {
            return Some(0);
        }
        self.relocations
            .iter()
            .filter(|r| r.from == from && r.to == to)
            .map(|r| r.duration)
            .min()
    }

    /// Terminal indices served by each line (from its trips), per line.
    pub fn line_terminals(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.lines.len()];
        for trip in &self.trips {
            for t in [trip.from, trip.to] {
                if !out[trip.line].contains(&t) {
                    out[trip.line].push(t);
                }
            }
        }
        for set in &mut out {
            set.sort_unstable();
        }
        out
    }

    /// Grid indices traversed by each line (union of member-trip traces).
    pub fn line_grid_footprints(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.lines.len()];
        for trip in &self.trips {
            for e in &trip.grid_trace {
                if !out[trip.line].contains(&e.grid) {
                    out[trip.line].push(e.grid);
                }
            }
        }
        for set in &mut out {
            set.sort_unstable();
        }
        out
    }

    pub fn with_delta(&self, delta: f64) -> Instance {
        let mut inst = self.clone();
        inst.delta = delta;
        inst
    }

    pub fn with_max_ib(&self, max_ib: usize) -> Instance {
        let mut inst = self.clone();
        inst.fleet.max_ib = max_ib;
        inst
    }

    pub fn with_relocation_fixed(&self, cost: f64) -> Instance {
        let mut inst = self.clone();
        inst.costs.relocation_fixed = cost;
        inst
    }

    /// Re-derive sensing periods and weights for a new period length.
    ///
    /// Only instances whose grids carry time-invariant weights can be
    /// re-gridded; per-period weight vectors have no defined mapping onto a
    /// different period count.
    pub fn with_delta_k(&self, delta_k: u32) -> Result<Instance, InstanceError> {
        if self
            .grids
            .iter()
            .any(|g| matches!(g.weight, WeightSpec::PerPeriod(_)))
        {
            return Err(InstanceError::Invalid {
                violations: vec![
                    "delta_k override requires time-invariant grid weights".into()
                ],
            });
        }
        let mut inst = self.clone();
        inst.sensing.delta_k = delta_k;
        let (sensing, mu) = derive_sensing(&inst.horizon, delta_k, &inst.grids)
            .map_err(|violations| InstanceError::Invalid { violations })?;
        inst.sensing = sensing;
        inst.mu = mu;
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid { violations })
        }
    }
}

fn derive_sensing(
    horizon: &Horizon,
    delta_k: u32,
    grids: &[GridCell],
) -> Result<(SensingSpec, Vec<Vec<f64>>), Vec<String>> {
    let n_points = horizon.n_points();
    if delta_k == 0 {
        return Err(vec!["sensing: delta_k must be positive".into()]);
    }
    if n_points % delta_k as usize != 0 {
        return Err(vec![format!(
            "sensing: horizon length {} is not a multiple of delta_k {}",
            n_points, delta_k
        )]);
    }
    let periods = n_points / delta_k as usize;
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(grids.len());
    for g in grids {
        match &g.weight {
            WeightSpec::Uniform(w) => raw.push(vec![*w; periods]),
            WeightSpec::PerPeriod(ws) => {
                if ws.len() != periods {
                    return Err(vec![format!(
                        "grid {}: expected {} period weights, got {}",
                        g.id,
                        periods,
                        ws.len()
                    )]);
                }
                raw.push(ws.clone());
            }
        }
    }
    if raw.iter().flatten().any(|&w| w < 0.0) {
        return Err(vec!["grid weights must be non-negative".into()]);
    }
    let total: f64 = raw.iter().flatten().sum();
    if total <= 0.0 {
        return Err(vec!["grid weights must sum to a positive value".into()]);
    }
    for row in &mut raw {
        for w in row.iter_mut() {
            *w /= total;
        }
    }
    Ok((SensingSpec { delta_k, periods }, raw))
}

/// Checks every instance invariant and reports each violation; an empty list
/// means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut v = Vec::new();
    let h = &inst.horizon;
    if h.start >= h.end {
        v.push(format!("horizon: start {} must precede end {}", h.start, h.end));
    }
    if h.step_minutes == 0 {
        v.push("horizon: step_minutes must be positive".into());
    }

    if inst.terminals.is_empty() {
        v.push("terminals: at least one terminal required".into());
    }
    for i in 0..inst.terminals.len() {
        for j in (i + 1)..inst.terminals.len() {
            if inst.terminals[i].id == inst.terminals[j].id {
                v.push(format!("terminals: duplicate id {}", inst.terminals[i].id));
            }
        }
    }
    let depots = inst.depots();
    if depots.is_empty() {
        v.push("terminals: at least one depot required".into());
    }

    let n_terms = inst.terminals.len();
    let n_grids = inst.grids.len();
    for (idx, trip) in inst.trips.iter().enumerate() {
        let label = format!("trip {} ({})", idx, trip_desc(inst, trip));
        if trip.from >= n_terms || trip.to >= n_terms {
            v.push(format!("{label}: unknown terminal"));
            continue;
        }
        if trip.arrive <= trip.depart {
            v.push(format!("{label}: arrive<=depart"));
        }
        if trip.depart < h.start || trip.arrive > h.end {
            v.push(format!("{label}: outside horizon"));
        }
        check_trace(&trip.grid_trace, n_grids, &label, &mut v);
    }

    for (idx, opt) in inst.relocations.iter().enumerate() {
        let label = format!("relocation {}", idx);
        if opt.from >= n_terms || opt.to >= n_terms {
            v.push(format!("{label}: unknown terminal"));
            continue;
        }
        if opt.from == opt.to && opt.duration == 0 {
            v.push(format!("{label}: same-terminal option needs duration >= 1"));
        }
        check_trace(&opt.grid_trace, n_grids, &label, &mut v);
    }

    for i in 0..inst.grids.len() {
        for j in (i + 1)..inst.grids.len() {
            if inst.grids[i].id == inst.grids[j].id {
                v.push(format!("grids: duplicate id {}", inst.grids[i].id));
            }
        }
    }

    match derive_sensing(&inst.horizon, inst.sensing.delta_k, &inst.grids) {
        Err(errs) => v.extend(errs),
        Ok((sensing, mu)) => {
            if sensing.periods != inst.sensing.periods {
                v.push(format!(
                    "sensing: stored period count {} does not match derived {}",
                    inst.sensing.periods, sensing.periods
                ));
            }
            let total: f64 = inst.mu.iter().flatten().sum();
            if (total - 1.0).abs() > WEIGHT_TOL {
                v.push(format!("weights: normalized sum {} must be 1", total));
            }
            if inst.mu.len() != mu.len() {
                v.push("weights: one row per grid required".into());
            }
        }
    }

    v.extend(inst.pwl.violations());

    if inst.costs.fixed_bus < 0.0
        || inst.costs.per_minute < 0.0
        || inst.costs.relocation_fixed < 0.0
    {
        v.push("costs: all components must be non-negative".into());
    }
    if inst.fleet.max_ib > inst.fleet.total {
        v.push(format!(
            "fleet: max_ib {} exceeds total {}",
            inst.fleet.max_ib, inst.fleet.total
        ));
    }
    if inst.delta < 0.0 {
        v.push("delta: objective weight must be non-negative".into());
    }

    // Pull-out/pull-in arcs need a travel time between every depot and every
    // terminal, supplied through relocation options.
    for &d in &depots {
        for j in 0..n_terms {
            if inst.link_duration(d, j).is_none() {
                v.push(format!(
                    "relocations: missing depot link {} -> {}",
                    inst.terminals[d].id, inst.terminals[j].id
                ));
            }
            if inst.link_duration(j, d).is_none() {
                v.push(format!(
                    "relocations: missing depot link {} -> {}",
                    inst.terminals[j].id, inst.terminals[d].id
                ));
            }
        }
    }

    v
}

fn trip_desc(inst: &Instance, trip: &TimetabledTrip) -> String {
    let name = |i: usize| {
        inst.terminals
            .get(i)
            .map(|t| t.id.clone())
            .unwrap_or_else(|| format!("#{i}"))
    };
    format!("{}->{}@{}", name(trip.from), name(trip.to), trip.depart)
}

fn check_trace(trace: &[TraceEntry], n_grids: usize, label: &str, v: &mut Vec<String>) {
    let mut prev = -1.0;
    for (i, e) in trace.iter().enumerate() {
        if e.grid >= n_grids {
            v.push(format!("{label}: unknown grid in trace entry {i}"));
        }
        if i == 0 && e.frac != 0.0 {
            v.push(format!("{label}: first trace fraction must be 0"));
        }
        if !(0.0..1.0).contains(&e.frac) {
            v.push(format!("{label}: trace fraction {} outside [0,1)", e.frac));
        }
        if e.frac <= prev {
            v.push(format!("{label}: trace fractions must be strictly increasing"));
        }
        prev = e.frac;
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawInstance {
    horizon: Horizon,
    terminals: Vec<RawTerminal>,
    trips: Vec<RawTrip>,
    #[serde(default)]
    relocations: Vec<RawRelocation>,
    grids: Vec<RawGrid>,
    sensing: RawSensing,
    #[serde(default = "default_pwl")]
    pwl: Vec<(f64, f64)>,
    costs: CostSpec,
    fleet: RawFleet,
    delta: f64,
}

fn default_pwl() -> Vec<(f64, f64)> {
    PiecewiseConcave::default_sqrt().segments
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTerminal {
    id: String,
    is_depot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTrip {
    line: String,
    from: String,
    to: String,
    depart: u32,
    arrive: u32,
    #[serde(default)]
    grid_trace: Vec<(String, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRelocation {
    from: String,
    to: String,
    duration: u32,
    #[serde(default)]
    grid_trace: Vec<(String, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawGrid {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawSensing {
    delta_k: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFleet {
    total: usize,
    max_ib: usize,
    #[serde(default)]
    ib_exact: bool,
}

/// Parses and validates an instance document; weights come out normalized.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawInstance =
        serde_path_to_error::deserialize(de).map_err(|e| InstanceError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    instance_from_raw(raw)
}

fn instance_from_raw(raw: RawInstance) -> Result<Instance, InstanceError> {
    let mut violations = Vec::new();

    let terminals: Vec<Terminal> = raw
        .terminals
        .iter()
        .map(|t| Terminal {
            id: t.id.clone(),
            is_depot: t.is_depot,
            name: t.name.clone(),
        })
        .collect();
    let term_idx = |id: &str| terminals.iter().position(|t| t.id == id);

    let mut grids = Vec::new();
    for g in &raw.grids {
        let weight = match (&g.weight, &g.weights) {
            (Some(w), None) => WeightSpec::Uniform(*w),
            (None, Some(ws)) => WeightSpec::PerPeriod(ws.clone()),
            _ => {
                violations.push(format!(
                    "grid {}: exactly one of `weight` or `weights` required",
                    g.id
                ));
                WeightSpec::Uniform(0.0)
            }
        };
        grids.push(GridCell {
            id: g.id.clone(),
            weight,
        });
    }
    let grid_idx = |id: &str| grids.iter().position(|g| g.id == id);

    let resolve_trace = |entries: &[(String, f64)], label: &str, violations: &mut Vec<String>| {
        let mut out = Vec::with_capacity(entries.len());
        for (id, frac) in entries {
            match grid_idx(id) {
                Some(g) => out.push(TraceEntry { grid: g, frac: *frac }),
                None => violations.push(format!("{label}: unknown grid {id}")),
            }
        }
        out
    };

    let mut lines: Vec<String> = Vec::new();
    let mut trips = Vec::new();
    for (i, t) in raw.trips.iter().enumerate() {
        let line = match lines.iter().position(|l| l == &t.line) {
            Some(l) => l,
            None => {
                lines.push(t.line.clone());
                lines.len() - 1
            }
        };
        let label = format!("trip {i} ({}->{}@{})", t.from, t.to, t.depart);
        let (from, to) = match (term_idx(&t.from), term_idx(&t.to)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                violations.push(format!("{label}: unknown terminal"));
                continue;
            }
        };
        trips.push(TimetabledTrip {
            line,
            from,
            to,
            depart: t.depart,
            arrive: t.arrive,
            grid_trace: resolve_trace(&t.grid_trace, &label, &mut violations),
        });
    }

    let mut relocations = Vec::new();
    for (i, r) in raw.relocations.iter().enumerate() {
        let label = format!("relocation {i} ({}->{})", r.from, r.to);
        let (from, to) = match (term_idx(&r.from), term_idx(&r.to)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                violations.push(format!("{label}: unknown terminal"));
                continue;
            }
        };
        relocations.push(RelocationOption {
            from,
            to,
            duration: r.duration,
            grid_trace: resolve_trace(&r.grid_trace, &label, &mut violations),
        });
    }

    if !violations.is_empty() {
        return Err(InstanceError::Invalid { violations });
    }

    let (sensing, mu) = derive_sensing(&raw.horizon, raw.sensing.delta_k, &grids)
        .map_err(|violations| InstanceError::Invalid { violations })?;

    // Store weights in normalized form so equal instances compare equal and
    // serialization is stable.
    for (g, cell) in grids.iter_mut().enumerate() {
        cell.weight = match cell.weight {
            WeightSpec::Uniform(_) => WeightSpec::Uniform(mu[g][0]),
            WeightSpec::PerPeriod(_) => WeightSpec::PerPeriod(mu[g].clone()),
        };
    }

    let inst = Instance {
        horizon: raw.horizon,
        terminals,
        lines,
        trips,
        relocations,
        grids,
        sensing,
        pwl: PiecewiseConcave {
            segments: raw.pwl,
        },
        costs: raw.costs,
        fleet: FleetSpec {
            total: raw.fleet.total,
            max_ib: raw.fleet.max_ib,
            ib_exact: raw.fleet.ib_exact,
        },
        delta: raw.delta,
        mu,
    };

    let violations = validate_instance(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(InstanceError::Invalid { violations })
    }
}

/// Canonical serialization: normalized weights, stable field order, trailing
/// newline. Parsing the output reproduces the instance byte-for-byte.
pub fn serialize_instance(inst: &Instance) -> String {
    let name = |i: usize| inst.terminals[i].id.clone();
    let grid_name = |i: usize| inst.grids[i].id.clone();
    let trace_out = |trace: &[TraceEntry]| {
        trace
            .iter()
            .map(|e| (grid_name(e.grid), e.frac))
            .collect::<Vec<_>>()
    };
    let raw = RawInstance {
        horizon: inst.horizon,
        terminals: inst
            .terminals
            .iter()
            .map(|t| RawTerminal {
                id: t.id.clone(),
                is_depot: t.is_depot,
                name: t.name.clone(),
            })
            .collect(),
        trips: inst
            .trips
            .iter()
            .map(|t| RawTrip {
                line: inst.lines[t.line].clone(),
                from: name(t.from),
                to: name(t.to),
                depart: t.depart,
                arrive: t.arrive,
                grid_trace: trace_out(&t.grid_trace),
            })
            .collect(),
        relocations: inst
            .relocations
            .iter()
            .map(|r| RawRelocation {
                from: name(r.from),
                to: name(r.to),
                duration: r.duration,
                grid_trace: trace_out(&r.grid_trace),
            })
            .collect(),
        grids: inst
            .grids
            .iter()
            .enumerate()
            .map(|(g, cell)| match &cell.weight {
                WeightSpec::Uniform(_) => RawGrid {
                    id: cell.id.clone(),
                    weight: Some(inst.mu[g][0]),
                    weights: None,
                },
                WeightSpec::PerPeriod(_) => RawGrid {
                    id: cell.id.clone(),
                    weight: None,
                    weights: Some(inst.mu[g].clone()),
                },
            })
            .collect(),
        sensing: RawSensing {
            delta_k: inst.sensing.delta_k,
        },
        pwl: inst.pwl.segments.clone(),
        costs: inst.costs,
        fleet: RawFleet {
            total: inst.fleet.total,
            max_ib: inst.fleet.max_ib,
            ib_exact: inst.fleet.ib_exact,
        },
        delta: inst.delta,
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("instance serialization");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Canonical fixtures, reused across the crate's tests and experiments.
// ---------------------------------------------------------------------------

pub mod fixtures {
    use super::*;
    use serde_json::json;

    /// Smallest instance exhibiting waiting: one line A<->B over six time
    /// points, one grid, two sensing periods, two buses with one sensor.
    pub fn t1() -> Instance {
        let doc = json!({
            "horizon": {"start": 0, "end": 5, "step_minutes": 15},
            "terminals": [
                {"id": "A", "is_depot": true},
                {"id": "B", "is_depot": false}
            ],
            "trips": [
                {"line": "L1", "from": "A", "to": "B", "depart": 0, "arrive": 2,
                 "grid_trace": [["g1", 0.0]]},
                {"line": "L1", "from": "B", "to": "A", "depart": 3, "arrive": 5,
                 "grid_trace": [["g1", 0.0]]}
            ],
            "relocations": [
                {"from": "A", "to": "B", "duration": 0},
                {"from": "B", "to": "A", "duration": 0}
            ],
            "grids": [{"id": "g1", "weight": 1.0}],
            "sensing": {"delta_k": 3},
            "pwl": [[1.0, 0.0], [0.366, 0.634], [0.0, 1.732]],
            "costs": {"fixed_bus": 10.0, "per_minute": 1.0/15.0, "relocation_fixed": 2.0},
            "fleet": {"total": 2, "max_ib": 1, "ib_exact": false},
            "delta": 10.0
        });
        parse_instance(&doc.to_string()).expect("fixture t1")
    }

    /// Two disjoint lines with a profitable inter-line relocation: L1 runs in
    /// the first half of the horizon, L2 in the second, and an instrumented
    /// bus can hop from B to C between them.
    pub fn t2() -> Instance {
        let doc = json!({
            "horizon": {"start": 0, "end": 3, "step_minutes": 15},
            "terminals": [
                {"id": "A", "is_depot": true},
                {"id": "B", "is_depot": false},
                {"id": "C", "is_depot": false},
                {"id": "D", "is_depot": false}
            ],
            "trips": [
                {"line": "L1", "from": "A", "to": "B", "depart": 0, "arrive": 1,
                 "grid_trace": [["g1", 0.0]]},
                {"line": "L1", "from": "B", "to": "A", "depart": 1, "arrive": 2,
                 "grid_trace": [["g1", 0.0]]},
                {"line": "L2", "from": "C", "to": "D", "depart": 2, "arrive": 3,
                 "grid_trace": [["g2", 0.0]]}
            ],
            "relocations": [
                {"from": "B", "to": "C", "duration": 1},
                {"from": "D", "to": "A", "duration": 1},
                {"from": "A", "to": "B", "duration": 0},
                {"from": "A", "to": "C", "duration": 0},
                {"from": "A", "to": "D", "duration": 0},
                {"from": "B", "to": "A", "duration": 0},
                {"from": "C", "to": "A", "duration": 0}
            ],
            "grids": [
                {"id": "g1", "weights": [0.5, 0.0]},
                {"id": "g2", "weights": [0.0, 0.5]}
            ],
            "sensing": {"delta_k": 2},
            "pwl": [[1.0, 0.0], [0.366, 0.634], [0.0, 1.732]],
            "costs": {"fixed_bus": 10.0, "per_minute": 1.0/15.0, "relocation_fixed": 2.0},
            "fleet": {"total": 3, "max_ib": 1, "ib_exact": false},
            "delta": 20.0
        });
        parse_instance(&doc.to_string()).expect("fixture t2")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pwl_default_matches_three_segment_approximation() {
        let pwl = PiecewiseConcave::default_sqrt();
        let cases = [(0.0, 0.0), (1.0, 1.0), (2.0, 1.366), (3.0, 1.732), (5.0, 1.732)];
        for (q, want) in cases {
            assert!(
                (pwl.eval(q) - want).abs() < 1e-12,
                "f({q}) = {} expected {want}",
                pwl.eval(q)
            );
        }
        assert!(pwl.violations().is_empty());
    }

    #[test]
    fn pwl_rejects_non_decreasing_slopes_and_offset_origin() {
        let bad = PiecewiseConcave {
            segments: vec![(1.0, 0.0), (1.5, 0.2)],
        };
        assert!(!bad.violations().is_empty());
        let offset = PiecewiseConcave {
            segments: vec![(1.0, 0.5)],
        };
        assert!(!offset.violations().is_empty());
    }

    #[test]
    fn t1_shape() {
        let t1 = fixtures::t1();
        assert!(validate_instance(&t1).is_empty());
        assert_eq!(t1.terminals.len(), 2);
        assert_eq!(t1.trips.len(), 2);
        assert_eq!(t1.grids.len(), 1);
        assert_eq!(t1.periods(), 2);
        assert_eq!(t1.n_points(), 6);
        // uniform weight over one grid and two periods
        assert!((t1.mu[0][0] - 0.5).abs() < WEIGHT_TOL);
        assert!((t1.mu[0][1] - 0.5).abs() < WEIGHT_TOL);
    }

    #[test]
    fn t2_shape() {
        let t2 = fixtures::t2();
        assert!(validate_instance(&t2).is_empty());
        assert_eq!(t2.lines.len(), 2);
        assert_eq!(t2.periods(), 2);
        assert!((t2.mu[0][0] - 0.5).abs() < WEIGHT_TOL);
        assert!((t2.mu[1][1] - 0.5).abs() < WEIGHT_TOL);
        assert_eq!(t2.mu[0][1], 0.0);
    }

    #[test]
    fn weights_normalize_to_one() {
        let doc = serde_json::json!({
            "horizon": {"start": 0, "end": 3, "step_minutes": 10},
            "terminals": [{"id": "A", "is_depot": true}],
            "trips": [{"line": "L", "from": "A", "to": "A", "depart": 0, "arrive": 1}],
            "grids": [{"id": "g1", "weight": 1.2}, {"id": "g2", "weight": 0.8}],
            "sensing": {"delta_k": 2},
            "costs": {"fixed_bus": 1.0, "per_minute": 0.1, "relocation_fixed": 0.0},
            "fleet": {"total": 1, "max_ib": 0},
            "delta": 0.0
        });
        let inst = parse_instance(&doc.to_string()).unwrap();
        let total: f64 = inst.mu.iter().flatten().sum();
        assert!((total - 1.0).abs() < WEIGHT_TOL);
        // sum 2.0 over raw (g,k) entries: each raw weight halves
        assert!((inst.mu[0][0] - 0.3).abs() < WEIGHT_TOL);
        assert!((inst.mu[1][0] - 0.2).abs() < WEIGHT_TOL);
    }

    #[test]
    fn canonical_serialization_round_trips() {
        for inst in [fixtures::t1(), fixtures::t2()] {
            let canon = serialize_instance(&inst);
            let reparsed = parse_instance(&canon).unwrap();
            assert_eq!(serialize_instance(&reparsed), canon);
            assert_eq!(reparsed, inst);
        }
    }

    #[test]
    fn schema_error_carries_json_path() {
        let doc = r#"{"horizon": {"start": 0, "end": "x", "step_minutes": 15}}"#;
        match parse_instance(doc) {
            Err(InstanceError::Schema { path, .. }) => {
                assert!(path.contains("horizon"), "path was {path}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_name_the_culprit() {
        let mut inst = fixtures::t1();
        inst.trips[0].arrive = 0;
        let v = validate_instance(&inst);
        assert!(v.iter().any(|m| m.contains("arrive<=depart")), "{v:?}");

        let mut inst = fixtures::t1();
        inst.trips[1].to = 99;
        let v = validate_instance(&inst);
        assert!(v.iter().any(|m| m.contains("unknown terminal")), "{v:?}");
    }

    #[test]
    fn horizon_must_be_multiple_of_delta_k() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&serialize_instance(&fixtures::t1())).unwrap();
        doc["sensing"]["delta_k"] = 4.into();
        let err = parse_instance(&doc.to_string()).unwrap_err();
        assert!(err.to_string().contains("multiple of delta_k"), "{err}");
    }

    #[test]
    fn missing_depot_link_is_reported() {
        let mut inst = fixtures::t1();
        inst.relocations.clear();
        let v = validate_instance(&inst);
        assert!(v.iter().any(|m| m.contains("missing depot link")), "{v:?}");
    }

    #[test]
    fn delta_k_override_rebroadcasts_uniform_weights() {
        let t1 = fixtures::t1();
        let coarse = t1.with_delta_k(6).unwrap();
        assert_eq!(coarse.periods(), 1);
        assert!((coarse.mu[0][0] - 1.0).abs() < WEIGHT_TOL);
        let fine = t1.with_delta_k(1).unwrap();
        assert_eq!(fine.periods(), 6);
        // per-period weight sources cannot be re-gridded
        assert!(fixtures::t2().with_delta_k(1).is_err());
    }
}
