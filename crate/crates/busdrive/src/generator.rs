//! Seeded synthetic instances: multi-line benchmark networks laid on a square
//! cell grid, and micro instances small enough for exhaustive oracles.

use crate::instance::{parse_instance, Instance};
use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const STEP_MINUTES: u32 = 30;

/// Largest divisor of `n` that keeps at least three periods, capped at 8
/// steps; falls back to two periods, then to one step.
fn pick_delta_k(n_points: usize) -> u32 {
    let candidate = |max_periods_ok: usize| {
        (1..=8.min(n_points))
            .filter(|&d| n_points % d == 0 && n_points / d >= max_periods_ok)
            .max()
    };
    candidate(3).or_else(|| candidate(2)).unwrap_or(1) as u32
}

/// Deterministic multi-line instance on a square grid of 1-cell sensing
/// zones. Lines are straight corridors with their own terminal pairs; nearby
/// terminals of different lines are joined by relocation options so sensors
/// can circulate. Costs default to 856 RMB fixed, 1.4 RMB per travel minute
/// and a 20 RMB relocation surcharge.
pub fn generate_synthetic_instance(
    seed: u64,
    n_lines: usize,
    horizon_hours: u32,
    headway_steps: u32,
) -> Instance {
    assert!(n_lines >= 1, "need at least one line");
    assert!(horizon_hours >= 1 && headway_steps >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_points = (horizon_hours as usize) * 60 / STEP_MINUTES as usize;
    let end = n_points as u32 - 1;
    let delta_k = pick_delta_k(n_points);
    let side = ((2 * n_lines) as f64).sqrt().ceil() as i64 + 2;

    // One straight corridor per line: endpoint cells plus the cells crossed.
    struct Corridor {
        a: (i64, i64),
        b: (i64, i64),
        cells: Vec<(i64, i64)>,
    }
    let mut corridors = Vec::with_capacity(n_lines);
    for _ in 0..n_lines {
        let len = rng.random_range(2..=3.min(side - 1)) as i64;
        let horizontal = rng.random_bool(0.5);
        let (dx, dy) = if horizontal { (1, 0) } else { (0, 1) };
        let x0 = rng.random_range(0..side - dx * len);
        let y0 = rng.random_range(0..side - dy * len);
        let cells: Vec<(i64, i64)> = (0..=len).map(|i| (x0 + dx * i, y0 + dy * i)).collect();
        corridors.push(Corridor {
            a: (x0, y0),
            b: (x0 + dx * len, y0 + dy * len),
            cells,
        });
    }

    let cell_id = |c: (i64, i64)| format!("c{}_{}", c.0, c.1);
    let mut grid_ids: Vec<(i64, i64)> = Vec::new();
    for c in corridors.iter().flat_map(|c| c.cells.iter()) {
        if !grid_ids.contains(c) {
            grid_ids.push(*c);
        }
    }
    let grids: Vec<_> = grid_ids
        .iter()
        .map(|&c| json!({"id": cell_id(c), "weight": 0.5 + rng.random::<f64>()}))
        .collect();

    let mut terminals = vec![json!({"id": "depot", "is_depot": true})];
    for i in 0..n_lines {
        terminals.push(json!({"id": format!("L{i}a"), "is_depot": false}));
        terminals.push(json!({"id": format!("L{i}b"), "is_depot": false}));
    }

    let trace_for = |cells: &[(i64, i64)]| {
        let n = cells.len();
        cells
            .iter()
            .enumerate()
            .map(|(j, &c)| json!([cell_id(c), j as f64 / n as f64]))
            .collect::<Vec<_>>()
    };

    let mut trips = Vec::new();
    for (i, cor) in corridors.iter().enumerate() {
        let dur = (cor.cells.len() as u32 - 1).max(1);
        let fwd = trace_for(&cor.cells);
        let rev: Vec<_> = {
            let mut cells = cor.cells.clone();
            cells.reverse();
            trace_for(&cells)
        };
        let mut t = 0u32;
        while t + dur <= end {
            trips.push(json!({
                "line": format!("L{i}"), "from": format!("L{i}a"), "to": format!("L{i}b"),
                "depart": t, "arrive": t + dur, "grid_trace": fwd,
            }));
            trips.push(json!({
                "line": format!("L{i}"), "from": format!("L{i}b"), "to": format!("L{i}a"),
                "depart": t, "arrive": t + dur, "grid_trace": rev,
            }));
            t += headway_steps;
        }
    }

    // Depot links carry zero duration: the depot acts as a shared pool next
    // to every terminal, so pull costs are the fixed bus cost only.
    let mut relocations = Vec::new();
    for i in 0..n_lines {
        for suffix in ["a", "b"] {
            relocations.push(json!({"from": "depot", "to": format!("L{i}{suffix}"), "duration": 0}));
            relocations.push(json!({"from": format!("L{i}{suffix}"), "to": "depot", "duration": 0}));
        }
    }
    // Inter-line hops between nearby terminals (at most two per terminal).
    let endpoint = |line: usize, s: &str| -> (i64, i64) {
        if s == "a" {
            corridors[line].a
        } else {
            corridors[line].b
        }
    };
    for i in 0..n_lines {
        for si in ["a", "b"] {
            let from_cell = endpoint(i, si);
            let mut near: Vec<(i64, usize, &str)> = Vec::new();
            for (j, sj) in (0..n_lines).flat_map(|j| [(j, "a"), (j, "b")]) {
                if j == i {
                    continue;
                }
                let to_cell = endpoint(j, sj);
                let dist = (from_cell.0 - to_cell.0).abs() + (from_cell.1 - to_cell.1).abs();
                if dist <= 2 {
                    near.push((dist, j, sj));
                }
            }
            near.sort();
            for &(dist, j, sj) in near.iter().take(2) {
                relocations.push(json!({
                    "from": format!("L{i}{si}"), "to": format!("L{j}{sj}"),
                    "duration": dist.max(1),
                }));
            }
        }
    }

    let total_buses = estimate_fleet(&trips, headway_steps) + 1;
    let doc = json!({
        "horizon": {"start": 0, "end": end, "step_minutes": STEP_MINUTES},
        "terminals": terminals,
        "trips": trips,
        "relocations": relocations,
        "grids": grids,
        "sensing": {"delta_k": delta_k},
        "pwl": [[1.0, 0.0], [0.366, 0.634], [0.0, 1.732]],
        "costs": {"fixed_bus": 856.0, "per_minute": 1.4, "relocation_fixed": 20.0},
        "fleet": {"total": total_buses, "max_ib": 2.min(total_buses), "ib_exact": false},
        "delta": 4000.0,
    });
    parse_instance(&doc.to_string()).expect("generated instance must validate")
}

/// Greedy per-line chaining: buses become available at their arrival terminal
/// and serve the next departure there. An upper bound on the fleet needed.
fn estimate_fleet(trips: &[serde_json::Value], _headway: u32) -> usize {
    use std::collections::BTreeMap;
    let mut by_line: BTreeMap<String, Vec<(&str, &str, u64, u64)>> = BTreeMap::new();
    for t in trips {
        by_line.entry(t["line"].as_str().unwrap().to_string()).or_default().push((
            t["from"].as_str().unwrap(),
            t["to"].as_str().unwrap(),
            t["depart"].as_u64().unwrap(),
            t["arrive"].as_u64().unwrap(),
        ));
    }
    let mut total = 0;
    for (_, mut line_trips) in by_line {
        line_trips.sort_by_key(|t| (t.2, t.0.to_string()));
        let mut idle: Vec<(&str, u64)> = Vec::new();
        let mut used = 0;
        for (from, to, depart, arrive) in line_trips {
            let slot = idle
                .iter()
                .position(|&(term, ready)| term == from && ready <= depart);
            match slot {
                Some(i) => {
                    idle.remove(i);
                }
                None => used += 1,
            }
            idle.push((to, arrive));
        }
        total += used;
    }
    total
}

/// Tiny random instance whose full model stays within `max_binaries` binary
/// variables (x, v and y), so the exhaustive oracle can solve it. Trips form
/// a chainable walk, which keeps every fleet split feasible.
pub fn generate_micro_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buses = *[1usize, 1, 2, 2, 3].choose(&mut rng).unwrap();
    let delta = *[0.0, 1.0, 5.0, 20.0].choose(&mut rng).unwrap();
    let max_ib = if buses == 1 {
        rng.random_range(0..=1)
    } else {
        1
    };

    let (doc, binaries) = match buses {
        3 => {
            // one terminal, two time points, a single trip: 3*(1+1+4) = 18
            let doc = json!({
                "horizon": {"start": 0, "end": 1, "step_minutes": 10},
                "terminals": [{"id": "A", "is_depot": true}],
                "trips": [{"line": "L", "from": "A", "to": "A", "depart": 0, "arrive": 1,
                           "grid_trace": [["g1", 0.0]]}],
                "grids": [{"id": "g1", "weight": 1.0}],
                "sensing": {"delta_k": rng.random_range(1..=2)},
                "costs": {"fixed_bus": 5.0, "per_minute": 0.1, "relocation_fixed": 0.0},
                "fleet": {"total": 3, "max_ib": max_ib, "ib_exact": false},
                "delta": delta,
            });
            (doc, 3 * (1 + 1 + 4))
        }
        2 => {
            // one terminal, up to four points, self-loop trips with bounded
            // concurrency so two buses always suffice
            let n_points = rng.random_range(3..=4u32);
            let end = n_points - 1;
            let mut windows: Vec<(u32, u32)> = Vec::new();
            for _ in 0..rng.random_range(1..=3) {
                let d = rng.random_range(0..end);
                let a = (d + rng.random_range(1..=2)).min(end);
                let overlap = windows
                    .iter()
                    .filter(|&&(wd, wa)| wd < a && d < wa)
                    .count();
                if overlap < 2 && windows.len() < 3 {
                    windows.push((d, a));
                }
            }
            if windows.is_empty() {
                windows.push((0, 1));
            }
            let n_grids = rng.random_range(1..=2usize);
            let trips: Vec<_> = windows
                .iter()
                .enumerate()
                .map(|(i, &(d, a))| {
                    let g = format!("g{}", i % n_grids + 1);
                    json!({"line": "L", "from": "A", "to": "A", "depart": d, "arrive": a,
                           "grid_trace": [[g, 0.0]]})
                })
                .collect();
            let arcs = (n_points as usize - 1) + 2 + trips.len();
            let binaries = 2 * (1 + 1 + arcs);
            let grids: Vec<_> = (1..=n_grids)
                .map(|g| json!({"id": format!("g{g}"), "weight": g as f64}))
                .collect();
            let delta_k = *divisors(n_points).choose(&mut rng).unwrap();
            let doc = json!({
                "horizon": {"start": 0, "end": end, "step_minutes": 10},
                "terminals": [{"id": "A", "is_depot": true}],
                "trips": trips,
                "grids": grids,
                "sensing": {"delta_k": delta_k},
                "costs": {"fixed_bus": 5.0, "per_minute": 0.1, "relocation_fixed": 0.0},
                "fleet": {"total": 2, "max_ib": max_ib, "ib_exact": false},
                "delta": delta,
            });
            (doc, binaries)
        }
        _ => {
            // two terminals, a walk of up to four trips served by one bus
            let n_points = rng.random_range(4..=6u32);
            let end = n_points - 1;
            let n_grids = rng.random_range(1..=2usize);
            let mut trips = Vec::new();
            let mut at = 0usize; // 0 = A, 1 = B
            let mut t = 0u32;
            for i in 0..rng.random_range(2..=4usize) {
                let dur = rng.random_range(1..=2u32);
                if t + dur > end {
                    break;
                }
                let next = if rng.random_bool(0.7) { 1 - at } else { at };
                let names = ["A", "B"];
                let trace = if rng.random_bool(0.8) {
                    let g = format!("g{}", i % n_grids + 1);
                    if n_grids == 2 && dur == 2 {
                        json!([[g, 0.0], [format!("g{}", (i + 1) % n_grids + 1), 0.5]])
                    } else {
                        json!([[g, 0.0]])
                    }
                } else {
                    json!([])
                };
                trips.push(json!({
                    "line": "L", "from": names[at], "to": names[next],
                    "depart": t, "arrive": t + dur, "grid_trace": trace,
                }));
                at = next;
                t += dur + rng.random_range(0..=1u32);
            }
            if trips.is_empty() {
                trips.push(json!({"line": "L", "from": "A", "to": "B",
                                   "depart": 0, "arrive": 1, "grid_trace": [["g1", 0.0]]}));
            }
            let arcs = 2 * (n_points as usize - 1) + 4 + trips.len();
            let binaries = 1 + 1 + arcs;
            let grids: Vec<_> = (1..=n_grids)
                .map(|g| json!({"id": format!("g{g}"), "weight": 1.0}))
                .collect();
            let delta_k = *divisors(n_points).choose(&mut rng).unwrap();
            let doc = json!({
                "horizon": {"start": 0, "end": end, "step_minutes": 10},
                "terminals": [{"id": "A", "is_depot": true}, {"id": "B", "is_depot": false}],
                "trips": trips,
                "relocations": [
                    {"from": "A", "to": "B", "duration": 0},
                    {"from": "B", "to": "A", "duration": 0}
                ],
                "grids": grids,
                "sensing": {"delta_k": delta_k},
                "costs": {"fixed_bus": 5.0, "per_minute": 0.1, "relocation_fixed": 0.0},
                "fleet": {"total": 1, "max_ib": max_ib, "ib_exact": false},
                "delta": delta,
            });
            (doc, binaries)
        }
    };
    debug_assert!(binaries <= 20, "micro instance too large: {binaries} binaries");
    parse_instance(&doc.to_string()).expect("micro instance must validate")
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|d| n % d == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{serialize_instance, validate_instance};

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic_instance(1, 6, 6, 1);
        let b = generate_synthetic_instance(1, 6, 6, 1);
        assert_eq!(serialize_instance(&a), serialize_instance(&b));
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_synthetic_instance(1, 6, 6, 1);
        let b = generate_synthetic_instance(2, 6, 6, 1);
        assert_ne!(a.trips, b.trips);
    }

    #[test]
    fn small_generated_instance_is_valid() {
        let inst = generate_synthetic_instance(7, 2, 2, 2);
        assert!(validate_instance(&inst).is_empty());
        assert!(inst.trips.len() >= 4, "got {} trips", inst.trips.len());
    }

    #[test]
    fn generated_costs_match_defaults() {
        let inst = generate_synthetic_instance(3, 4, 6, 2);
        assert_eq!(inst.costs.fixed_bus, 856.0);
        assert_eq!(inst.costs.per_minute, 1.4);
        assert_eq!(inst.costs.relocation_fixed, 20.0);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn micro_instances_validate_and_stay_small() {
        for seed in 0..40 {
            let inst = generate_micro_instance(seed);
            assert!(
                validate_instance(&inst).is_empty(),
                "seed {seed}: {:?}",
                validate_instance(&inst)
            );
            assert!(inst.fleet.total <= 3);
            assert!(inst.trips.len() <= 4);
        }
    }

    #[test]
    fn micro_instances_are_deterministic() {
        for seed in [0, 7, 19] {
            let a = generate_micro_instance(seed);
            let b = generate_micro_instance(seed);
            assert_eq!(serialize_instance(&a), serialize_instance(&b));
        }
    }
}
