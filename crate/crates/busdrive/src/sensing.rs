//! Coverage counts, effective sensing times and the sensing score computed
//! from instrumented-bus arc paths. All functions are pure.

use crate::instance::{Instance, PiecewiseConcave};
use crate::network::Network;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("path {path} breaks at position {position}: arc arrives at node {arrived:?} but the next arc departs from {departs:?}")]
    DisconnectedPath {
        path: usize,
        position: usize,
        arrived: usize,
        departs: usize,
    },
}

/// Envelope value of the concave effective-sensing-time function at an
/// integer coverage count.
pub fn effective_sensing_value(q: u32, pwl: &PiecewiseConcave) -> f64 {
    pwl.eval(q as f64)
}

/// Number of (path, arc) incidences covering each (grid, period) pair. A bus
/// crossing two arcs that sense the same pair counts twice; so do two buses
/// on the same arc.
pub fn coverage_counts(
    ib_paths: &[Vec<usize>],
    net: &Network,
) -> Result<BTreeMap<(usize, usize), u32>, SensingError> {
    let mut counts = BTreeMap::new();
    for (p, path) in ib_paths.iter().enumerate() {
        for w in path.windows(2) {
            let (a, b) = (&net.arcs[w[0]], &net.arcs[w[1]]);
            if a.to != b.from {
                return Err(SensingError::DisconnectedPath {
                    path: p,
                    position: path.iter().position(|&x| x == w[1]).unwrap_or(0),
                    arrived: a.to.0,
                    departs: b.from.0,
                });
            }
        }
        for &arc in path {
            for &pair in &net.arcs[arc].coverage {
                *counts.entry(pair).or_insert(0) += 1;
            }
        }
    }
    Ok(counts)
}

/// One row of the score breakdown, keyed by grid and period.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub grid: usize,
    pub period: usize,
    pub mu: f64,
    pub q: u32,
    pub r: f64,
    pub contribution: f64,
}

/// Weighted sensing score and its per-pair breakdown; rows sum to the score.
pub fn sensing_score(
    counts: &BTreeMap<(usize, usize), u32>,
    mu: &[Vec<f64>],
    pwl: &PiecewiseConcave,
) -> (f64, Vec<ScoreRow>) {
    let mut rows = Vec::new();
    let mut score = 0.0;
    for (grid, weights) in mu.iter().enumerate() {
        for (period, &w) in weights.iter().enumerate() {
            let q = counts.get(&(grid, period)).copied().unwrap_or(0);
            let r = effective_sensing_value(q, pwl);
            let contribution = w * r;
            score += contribution;
            rows.push(ScoreRow {
                grid,
                period,
                mu: w,
                q,
                r,
                contribution,
            });
        }
    }
    (score, rows)
}

/// Complete sensing outcome of a set of IB paths.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingProfile {
    pub q: BTreeMap<(usize, usize), u32>,
    pub rows: Vec<ScoreRow>,
    pub score: f64,
    /// Fraction of grids sensed at least once in any period.
    pub coverage_rate: f64,
}

impl SensingProfile {
    pub fn from_paths(
        ib_paths: &[Vec<usize>],
        net: &Network,
        inst: &Instance,
    ) -> Result<SensingProfile, SensingError> {
        let q = coverage_counts(ib_paths, net)?;
        Ok(Self::from_counts(q, inst))
    }

    pub fn from_counts(q: BTreeMap<(usize, usize), u32>, inst: &Instance) -> SensingProfile {
        let (score, rows) = sensing_score(&q, &inst.mu, &inst.pwl);
        let covered = (0..inst.grids.len())
            .filter(|&g| q.iter().any(|(&(grid, _), &n)| grid == g && n > 0))
            .count();
        SensingProfile {
            q,
            rows,
            score,
            coverage_rate: covered as f64 / inst.grids.len().max(1) as f64,
        }
    }

    pub fn empty(inst: &Instance) -> SensingProfile {
        Self::from_counts(BTreeMap::new(), inst)
    }

    /// Tidy export consumed by heatmap tooling: grid_id, k, mu, q, r,
    /// contribution.
    pub fn breakdown_csv(&self, inst: &Instance) -> String {
        let mut out = String::from("grid_id,k,mu,q,r,contribution\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                inst.grids[row.grid].id,
                row.period,
                crate::report::fmt_money(row.mu),
                row.q,
                crate::report::fmt_money(row.r),
                crate::report::fmt_money(row.contribution)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::t1;
    use crate::network::{build_network, ArcKind};
    use proptest::prelude::*;

    #[test]
    fn envelope_spot_values() {
        let pwl = PiecewiseConcave::default_sqrt();
        for (q, want) in [(0, 0.0), (1, 1.0), (2, 1.366), (3, 1.732), (5, 1.732)] {
            assert!((effective_sensing_value(q, &pwl) - want).abs() < 1e-12);
        }
    }

    /// Path of the single bus that serves both T1 trips.
    fn t1_roundtrip_path(net: &Network) -> Vec<usize> {
        let svc = net.service_arcs();
        let pull_out_a = net
            .arc_ids(ArcKind::PullOut)
            .find(|&i| net.arcs[i].to_terminal == 0)
            .unwrap();
        let wait_b = net
            .arc_ids(ArcKind::Wait)
            .find(|&i| net.arcs[i].from_terminal == 1 && net.arcs[i].from_t == Some(2))
            .unwrap();
        let pull_in_a = net
            .arc_ids(ArcKind::PullIn)
            .find(|&i| net.arcs[i].from_terminal == 0)
            .unwrap();
        vec![pull_out_a, svc[0], wait_b, svc[1], pull_in_a]
    }

    #[test]
    fn t1_single_ib_counts() {
        let inst = t1();
        let net = build_network(&inst).unwrap();
        let path = t1_roundtrip_path(&net);
        let counts = coverage_counts(&[path.clone()], &net).unwrap();
        let expected: BTreeMap<_, _> = [((0, 0), 1), ((0, 1), 1)].into_iter().collect();
        assert_eq!(counts, expected);

        // two identical paths double every count
        let doubled = coverage_counts(&[path.clone(), path], &net).unwrap();
        assert!(doubled.values().all(|&n| n == 2));

        let profile = SensingProfile::from_counts(counts, &inst);
        assert!((profile.score - 1.0).abs() < 1e-9, "0.5*1 + 0.5*1");
        assert_eq!(profile.coverage_rate, 1.0);
    }

    #[test]
    fn no_paths_scores_zero() {
        let inst = t1();
        let profile = SensingProfile::empty(&inst);
        assert_eq!(profile.score, 0.0);
        assert_eq!(profile.coverage_rate, 0.0);
        assert!(profile.rows.iter().all(|r| r.q == 0 && r.r == 0.0));
    }

    #[test]
    fn disconnected_path_is_rejected() {
        let inst = t1();
        let net = build_network(&inst).unwrap();
        let svc = net.service_arcs();
        // A->B then B->A is broken without the wait at B
        let err = coverage_counts(&[vec![svc[0], svc[1]]], &net).unwrap_err();
        assert!(err.to_string().contains("breaks"));
    }

    #[test]
    fn single_pair_saturates_at_envelope_cap() {
        let inst = t1();
        let counts: BTreeMap<_, _> = [((0usize, 0usize), 3u32)].into_iter().collect();
        let (score, rows) = sensing_score(&counts, &[vec![1.0, 0.0]], &inst.pwl);
        assert!((score - 1.732).abs() < 1e-12);
        assert!((rows.iter().map(|r| r.contribution).sum::<f64>() - score).abs() < 1e-12);
    }

    #[test]
    fn breakdown_rows_sum_to_score() {
        let inst = t1();
        let counts: BTreeMap<_, _> = [((0, 0), 2u32)].into_iter().collect();
        let profile = SensingProfile::from_counts(counts, &inst);
        let total: f64 = profile.rows.iter().map(|r| r.contribution).sum();
        assert!((total - profile.score).abs() < 1e-12);
        let csv = profile.breakdown_csv(&inst);
        assert_eq!(csv.lines().count(), profile.rows.len() + 1);
    }

    proptest! {
        /// Diminishing marginal gain of the envelope at integer counts.
        #[test]
        fn concavity_of_default_envelope(q in 1u32..20) {
            let pwl = PiecewiseConcave::default_sqrt();
            let gain_up = effective_sensing_value(q + 1, &pwl) - effective_sensing_value(q, &pwl);
            let gain_down = effective_sensing_value(q, &pwl) - effective_sensing_value(q - 1, &pwl);
            prop_assert!(gain_up <= gain_down + 1e-12);
            prop_assert!(gain_up >= -1e-12, "non-decreasing");
        }

        /// Scaling every weight by c scales the score by exactly c.
        #[test]
        fn weight_scale_duality(qs in proptest::collection::vec(0u32..6, 4)) {
            let pwl = PiecewiseConcave::default_sqrt();
            let counts: BTreeMap<_, _> = qs
                .iter()
                .enumerate()
                .map(|(k, &q)| ((0usize, k), q))
                .collect();
            let mu = vec![vec![0.1, 0.2, 0.3, 0.4]];
            let scaled = vec![vec![0.2, 0.4, 0.6, 0.8]];
            let (base, _) = sensing_score(&counts, &mu, &pwl);
            let (doubled, _) = sensing_score(&counts, &scaled, &pwl);
            prop_assert!((doubled - 2.0 * base).abs() < 1e-12);
        }

        /// Adding a path never decreases the score.
        #[test]
        fn monotone_in_paths(seed in 0u64..20) {
            let inst = crate::generator::generate_micro_instance(seed);
            let net = build_network(&inst).unwrap();
            // single service arc as a degenerate "path"
            let svc = net.service_arcs();
            let one = SensingProfile::from_paths(&[vec![svc[0]]], &net, &inst).unwrap();
            let two = SensingProfile::from_paths(&[vec![svc[0]], vec![svc[0]]], &net, &inst).unwrap();
            prop_assert!(two.score >= one.score - 1e-12);
        }
    }
}
