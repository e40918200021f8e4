//! Per-point aggregates of trial records.

use std::collections::BTreeSet;

use itertools::Itertools;

use super::experiment::{avg_iterations, Scheme, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub axis: f64,
    pub scheme: Scheme,
    pub trials: usize,
    pub passed: usize,
    /// Draws at this point where every scheme passed.
    pub paired: usize,
    /// Mean sum power over the paired draws (NaN when there are none).
    pub mean_sum_power: f64,
    /// Mean balanced level over draws that did not error.
    pub mean_balanced_level: f64,
    pub avg_iterations: f64,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// One summary per (axis point, scheme), in record order.
pub fn summarize(records: &[TrialRecord]) -> Vec<PointSummary> {
    let mut out = Vec::new();
    for (_, point) in &records.iter().chunk_by(|r| r.axis.to_bits()) {
        let point: Vec<&TrialRecord> = point.collect();
        let failed: BTreeSet<usize> = point.iter().filter(|r| !r.passed).map(|r| r.trial).collect();
        let schemes: Vec<Scheme> = point.iter().map(|r| r.scheme).unique().collect();
        for scheme in schemes {
            let rows: Vec<TrialRecord> = point.iter().filter(|r| r.scheme == scheme).map(|r| (*r).clone()).collect();
            let paired: Vec<&TrialRecord> = rows.iter().filter(|r| !failed.contains(&r.trial)).collect();
            out.push(PointSummary {
                axis: rows[0].axis,
                scheme,
                trials: rows.len(),
                passed: rows.iter().filter(|r| r.passed).count(),
                paired: paired.len(),
                mean_sum_power: mean(paired.iter().map(|r| r.sum_power)),
                mean_balanced_level: mean(rows.iter().map(|r| r.balanced_level).filter(|v| v.is_finite())),
                avg_iterations: avg_iterations(&rows).expect("at least one record"),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TrialStatus;

    fn rec(axis: f64, trial: usize, scheme: Scheme, passed: bool, power: f64) -> TrialRecord {
        TrialRecord {
            axis,
            trial,
            seed: trial as u64,
            scheme,
            status: if passed { TrialStatus::Feasible } else { TrialStatus::Infeasible },
            passed,
            t: 1.0,
            balanced_level: 2.0,
            p_b: power / 2.0,
            p_r: power / 2.0,
            sum_power: power,
            feas_outer: 2,
            min_outer: usize::from(passed),
            inner_iters: 3,
            sinr: vec![1.0],
        }
    }

    #[test]
    fn pairs_draws_across_schemes() {
        let records = vec![
            rec(0.0, 0, Scheme::Af, true, 4.0),
            rec(0.0, 0, Scheme::Svd, true, 2.0),
            rec(0.0, 1, Scheme::Af, false, 9.0),
            rec(0.0, 1, Scheme::Svd, true, 6.0),
            rec(1.0, 0, Scheme::Af, true, 1.0),
            rec(1.0, 0, Scheme::Svd, true, 1.0),
        ];
        let s = summarize(&records);
        assert_eq!(s.len(), 4);
        assert_eq!((s[0].scheme, s[0].passed, s[0].paired, s[0].mean_sum_power), (Scheme::Af, 1, 1, 4.0));
        assert_eq!((s[1].scheme, s[1].passed, s[1].paired, s[1].mean_sum_power), (Scheme::Svd, 2, 1, 2.0));
        assert_eq!(s[0].avg_iterations, 0.5 * 3.0 + 0.5 * 2.0);
        assert_eq!(s[2].axis, 1.0);
    }

    #[test]
    fn no_paired_draws_gives_nan_power() {
        let s = summarize(&[rec(0.0, 0, Scheme::Af, false, 1.0)]);
        assert!(s[0].mean_sum_power.is_nan());
        assert_eq!(s[0].paired, 0);
    }
}
