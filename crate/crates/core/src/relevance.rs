//! Fisher-score relevance ranking and the top-m relevance filter.

use num_bigint::BigUint;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::softmax;

/// Default number of features kept by the relevance filter.
pub const DEFAULT_FILTER_CAP: usize = 100;

/// Multiplier applied to the largest finite score to rank perfectly separating features.
const SEPARATING_SCORE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceScores {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Original feature indices retained by the filter, best first.
    pub kept_indices: Vec<usize>,
}

impl RelevanceScores {
    pub fn compute(train: &Dataset, filter_cap: usize, exec: Exec) -> Result<Self> {
        let raw = fisher_scores_with(train, exec);
        let normalized = normalize_scores(&raw);
        let kept_indices = filter_irrelevant(&raw, filter_cap)?;
        Ok(RelevanceScores {
            raw,
            normalized,
            kept_indices,
        })
    }
}

pub fn fisher_scores(train: &Dataset) -> Vec<f64> {
    fisher_scores_with(train, Exec::Sequential)
}

/// Fisher score of every feature over the given patterns.
///
/// Per-class spread is the population variance. A feature with zero
/// within-class variance scores 0 when its class means coincide and
/// otherwise ten times the largest finite score (or 10 when no feature has a
/// positive finite score).
pub fn fisher_scores_with(train: &Dataset, exec: Exec) -> Vec<f64> {
    let fractions = exec.map_range(train.n_features(), |j| fisher_ratio(train, j));
    let max_finite = fractions
        .iter()
        .filter(|&&(_, den)| den > 0.0)
        .map(|&(num, den)| num / den)
        .fold(0.0_f64, f64::max);
    let cap = SEPARATING_SCORE_FACTOR * if max_finite > 0.0 { max_finite } else { 1.0 };
    fractions
        .into_iter()
        .map(|(num, den)| match (den > 0.0, num > 0.0) {
            (true, _) => num / den,
            (false, true) => cap,
            (false, false) => 0.0,
        })
        .collect()
}

/// Between-class and within-class scatter of one feature.
fn fisher_ratio(train: &Dataset, feature: usize) -> (f64, f64) {
    let classes = train.class_count();
    let mut count = vec![0usize; classes];
    let mut sum = vec![0.0; classes];
    for (i, &label) in train.labels().iter().enumerate() {
        count[label] += 1;
        sum[label] += train.value(i, feature);
    }
    let total: f64 = sum.iter().sum();
    let global_mean = total / train.n_patterns() as f64;
    let class_mean: Vec<f64> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();

    // Σ_k n_k σ_k² with population variance equals the pooled squared deviation.
    let within: f64 = train
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let d = train.value(i, feature) - class_mean[label];
            d * d
        })
        .sum();
    let between: f64 = class_mean
        .iter()
        .zip(&count)
        .map(|(&m, &n)| n as f64 * (m - global_mean) * (m - global_mean))
        .sum();
    (between, within)
}

/// Logistic normalization of raw scores by their mean and population standard deviation.
pub fn normalize_scores(raw: &[f64]) -> Vec<f64> {
    softmax::logistic_scale(raw)
}

/// Indices of the `min(m, n)` highest raw scores, best first; ties go to the
/// lower feature index.
pub fn filter_irrelevant(raw: &[f64], m: usize) -> Result<Vec<usize>> {
    if m < 2 {
        return Err(Error::invalid(format!("filter cap must be at least 2, got {m}")));
    }
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]).then(a.cmp(&b)));
    order.truncate(m);
    Ok(order)
}

/// Number of candidate subsets of `n` features, `2^n`.
pub fn subset_count(n: usize) -> BigUint {
    BigUint::from(1u8) << n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Dataset {
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn equal_class_means_score_zero() {
        let d = dataset(
            vec![vec![0.0], vec![2.0], vec![2.0], vec![0.0]],
            vec![0, 0, 1, 1],
        );
        assert_eq!(fisher_scores(&d), vec![0.0]);
    }

    #[test]
    fn separating_feature_gets_cap() {
        let d = dataset(
            vec![
                vec![0.0, 0.1],
                vec![0.0, 0.3],
                vec![1.0, 0.2],
                vec![1.0, 0.9],
            ],
            vec![0, 0, 1, 1],
        );
        let scores = fisher_scores(&d);
        assert_eq!(scores[0], 10.0 * scores[1]);
        assert!(scores[1] > 0.0);

        let only = dataset(
            vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]],
            vec![0, 0, 1, 1],
        );
        assert_eq!(fisher_scores(&only), vec![10.0]);
    }

    #[test]
    fn constant_feature_scores_zero() {
        let d = dataset(vec![vec![3.0], vec![3.0], vec![3.0]], vec![0, 1, 1]);
        assert_eq!(fisher_scores(&d), vec![0.0]);
    }

    #[test]
    fn hand_computed_score() {
        // class 0: {1, 3} mean 2 var 1; class 1: {5, 7} mean 6 var 1; global mean 4
        // between = 2*4 + 2*4 = 16, within = 2*1 + 2*1 = 4
        let d = dataset(
            vec![vec![1.0], vec![3.0], vec![5.0], vec![7.0]],
            vec![0, 0, 1, 1],
        );
        assert!((fisher_scores(&d)[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_scores(&[2.0, 2.0, 2.0]), vec![0.5; 3]);
        let out = normalize_scores(&[0.0, 2.0]);
        let e = std::f64::consts::E;
        assert!((out[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((out[1] - 1.0 / (1.0 + 1.0 / e)).abs() < 1e-15);
        assert_eq!(normalize_scores(&[1.0, 0.0, 2.0])[0], 0.5);
    }

    #[test]
    fn filter_keeps_all_when_small() {
        let raw: Vec<f64> = (0..60).map(|i| (i % 7) as f64).collect();
        let kept = filter_irrelevant(&raw, 100).unwrap();
        assert_eq!(kept.len(), 60);
    }

    #[test]
    fn filter_tie_rule() {
        assert_eq!(filter_irrelevant(&[3.0, 1.0, 3.0], 2).unwrap(), vec![0, 2]);
        assert!(filter_irrelevant(&[1.0], 1).is_err());
    }

    #[test]
    fn filter_caps_large_sets() {
        let raw: Vec<f64> = (0..279).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let kept = filter_irrelevant(&raw, 100).unwrap();
        assert_eq!(kept.len(), 100);
        let worst_kept = kept.iter().map(|&i| raw[i]).fold(f64::INFINITY, f64::min);
        for i in (0..279).filter(|i| !kept.contains(i)) {
            assert!(raw[i] <= worst_kept);
        }
    }

    #[test]
    fn subset_counts() {
        assert_eq!(subset_count(0), BigUint::from(1u8));
        assert_eq!(subset_count(3), BigUint::from(8u8));
        assert_eq!(subset_count(57).to_string(), "144115188075855872");
        assert_eq!(subset_count(2000).bits(), 2001);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            values in prop::collection::vec(-5.0f64..5.0, 12),
            slope in 0.1f64..20.0,
            offset in -50.0f64..50.0,
        ) {
            let labels = vec![0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2];
            let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v, slope * v + offset]).collect();
            let scores = fisher_scores(&dataset(rows, labels));
            prop_assert!(scores[0] >= 0.0);
            prop_assert!((scores[0] - scores[1]).abs() <= 1e-9 * scores[0].max(1.0));
        }

        #[test]
        fn normalization_is_strictly_monotone(raw in prop::collection::vec(0.0f64..100.0, 2..30)) {
            let out = normalize_scores(&raw);
            for i in 0..raw.len() {
                prop_assert!(out[i] > 0.0 && out[i] < 1.0);
                for j in 0..raw.len() {
                    if raw[i] < raw[j] {
                        prop_assert!(out[i] < out[j]);
                    }
                }
            }
        }
    }
}
