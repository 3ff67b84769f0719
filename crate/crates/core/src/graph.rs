//! Complete feature-similarity graph weighted by absolute Pearson correlation.

use std::fmt::Write as _;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::softmax;

/// Dense symmetric similarity graph over a subset of dataset features.
///
/// `raw_weights` holds |Pearson| values with a unit diagonal. `weights` holds
/// the logistic-normalized off-diagonal similarities; its diagonal is zero
/// because self-similarity is not an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    node_ids: Vec<usize>,
    weights: Vec<f64>,
    raw_weights: Vec<f64>,
}

impl FeatureGraph {
    /// Graph with explicit edge weights, used for community detection on
    /// hand-built graphs. The same matrix serves as raw weights; the diagonal
    /// is ignored.
    pub fn from_weights(weights: Vec<Vec<f64>>) -> Result<Self> {
        let n = weights.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!("weight row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &w) in row.iter().enumerate() {
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::invalid(format!("weight ({i}, {j}) = {w} is not a non-negative number")));
                }
                if w != weights[j][i] {
                    return Err(Error::invalid(format!("weights not symmetric at ({i}, {j})")));
                }
                flat.push(if i == j { 0.0 } else { w });
            }
        }
        let mut raw_weights = flat.clone();
        for i in 0..n {
            raw_weights[i * n + i] = 1.0;
        }
        Ok(FeatureGraph {
            node_ids: (0..n).collect(),
            weights: flat,
            raw_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    /// Original dataset feature index of each node.
    pub fn node_ids(&self) -> &[usize] {
        &self.node_ids
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn raw_weight(&self, i: usize, j: usize) -> f64 {
        self.raw_weights[i * self.len() + j]
    }

    pub fn weights_row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.weights[i * n..(i + 1) * n]
    }

    /// Mean raw similarity over all unordered pairs of the given nodes; 0 for fewer than two.
    pub fn mean_raw_similarity(&self, nodes: &[usize]) -> f64 {
        mean_pairwise(nodes, |i, j| self.raw_weight(i, j))
    }

    /// Mean normalized similarity over all unordered pairs of the given nodes; 0 for fewer than two.
    pub fn mean_similarity(&self, nodes: &[usize]) -> f64 {
        mean_pairwise(nodes, |i, j| self.weight(i, j))
    }

    /// Normalized weights as CSV with a header of original feature indices.
    pub fn to_csv(&self, feature_names: Option<&[String]>) -> String {
        let name = |id: usize| match feature_names {
            Some(names) => names[id].clone(),
            None => format!("f{id}"),
        };
        let mut out = String::from("feature");
        for &id in &self.node_ids {
            let _ = write!(out, ",{}", name(id));
        }
        out.push('\n');
        for (i, &id) in self.node_ids.iter().enumerate() {
            out.push_str(&name(id));
            for w in self.weights_row(i) {
                let _ = write!(out, ",{w}");
            }
            out.push('\n');
        }
        out
    }
}

fn mean_pairwise(nodes: &[usize], weight: impl Fn(usize, usize) -> f64) -> f64 {
    if nodes.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (a, &i) in nodes.iter().enumerate() {
        for &j in &nodes[a + 1..] {
            sum += weight(i, j);
        }
    }
    let pairs = nodes.len() * (nodes.len() - 1) / 2;
    sum / pairs as f64
}

/// Absolute sample Pearson correlation; 0 when either vector is constant.
pub fn pearson_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "vectors differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two observations"));
    }
    Ok(centered_similarity(&Centered::new(x), &Centered::new(y)))
}

struct Centered {
    deviations: Vec<f64>,
    sum_sq: f64,
}

impl Centered {
    fn new(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let constant = values.iter().all(|&v| v == values[0]);
        let deviations: Vec<f64> = if constant {
            vec![0.0; values.len()]
        } else {
            values.iter().map(|v| v - mean).collect()
        };
        let sum_sq = deviations.iter().map(|d| d * d).sum::<f64>();
        Centered { deviations, sum_sq }
    }
}

fn centered_similarity(x: &Centered, y: &Centered) -> f64 {
    if x.sum_sq == 0.0 || y.sum_sq == 0.0 {
        return 0.0;
    }
    let cov: f64 = x.deviations.iter().zip(&y.deviations).map(|(a, b)| a * b).sum();
    // sqrt(s * s) == s exactly, so identical features give exactly 1
    (cov / (x.sum_sq * y.sum_sq).sqrt()).abs().min(1.0)
}

pub fn build_graph(train: &Dataset, kept: &[usize]) -> Result<FeatureGraph> {
    build_graph_with(train, kept, Exec::Sequential)
}

/// Builds the complete similarity graph over the `kept` features of the
/// training patterns. Off-diagonal similarities are logistic-normalized by
/// their own mean and standard deviation.
pub fn build_graph_with(train: &Dataset, kept: &[usize], exec: Exec) -> Result<FeatureGraph> {
    let n = kept.len();
    if n < 2 {
        return Err(Error::invalid(format!("graph needs at least two features, got {n}")));
    }
    if train.n_patterns() < 2 {
        return Err(Error::invalid("graph needs at least two training patterns"));
    }
    if let Some(&bad) = kept.iter().find(|&&j| j >= train.n_features()) {
        return Err(Error::invalid(format!("feature index {bad} out of range")));
    }
    let columns: Vec<Centered> = exec.map(kept, |&j| Centered::new(&train.column(j)));

    let rows = exec.map_range(n, |i| {
        (0..n)
            .map(|j| if i == j { 1.0 } else { centered_similarity(&columns[i], &columns[j]) })
            .collect::<Vec<f64>>()
    });
    let raw_weights: Vec<f64> = rows.into_iter().flatten().collect();

    let off_diagonal: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| raw_weights[i * n + j])
        .collect();
    let mut scaled = softmax::logistic_scale(&off_diagonal).into_iter();
    let mut weights = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                weights[i * n + j] = scaled.next().unwrap();
            }
        }
    }

    Ok(FeatureGraph {
        node_ids: kept.to_vec(),
        weights,
        raw_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns_dataset(columns: &[Vec<f64>]) -> Dataset {
        let p = columns[0].len();
        let rows = (0..p).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        let labels = (0..p).map(|i| i % 2).collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn pearson_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pearson_similarity(&x, &x).unwrap(), 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v + 5.0).collect();
        assert!((pearson_similarity(&x, &neg).unwrap() - 1.0).abs() < 1e-15);
        let y = [1.0, 3.0, 2.0, 4.0];
        assert!((pearson_similarity(&x, &y).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(pearson_similarity(&x, &[2.0; 4]).unwrap(), 0.0);
        assert!(pearson_similarity(&x, &y[..3]).is_err());
    }

    #[test]
    fn identical_features() {
        let c = vec![0.1, 0.5, 0.2, 0.9];
        let g = build_graph(&columns_dataset(&[c.clone(), c]), &[0, 1]).unwrap();
        assert_eq!(g.raw_weight(0, 0), 1.0);
        assert_eq!(g.raw_weight(0, 1), 1.0);
        assert_eq!(g.raw_weight(1, 0), 1.0);
        assert_eq!(g.weight(0, 1), 0.5);
    }

    #[test]
    fn equal_similarities_normalize_to_half() {
        let c = vec![0.1, 0.5, 0.2, 0.9];
        let g = build_graph(&columns_dataset(&[c.clone(), c.clone(), c]), &[0, 1, 2]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(g.weight(i, j), 0.5);
                }
            }
        }
    }

    #[test]
    fn rejects_single_feature() {
        let d = columns_dataset(&[vec![0.0, 1.0]]);
        assert!(build_graph(&d, &[0]).is_err());
    }

    #[test]
    fn permutation_equivariance() {
        let cols = vec![
            vec![0.1, 0.4, 0.3, 0.8, 0.5],
            vec![0.9, 0.2, 0.4, 0.1, 0.6],
            vec![0.3, 0.3, 0.7, 0.2, 0.1],
            vec![0.5, 0.6, 0.1, 0.9, 0.2],
        ];
        let d = columns_dataset(&cols);
        let g = build_graph(&d, &[0, 1, 2, 3]).unwrap();
        let perm = [2, 0, 3, 1];
        let h = build_graph(&d, &perm).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(h.raw_weight(a, b), g.raw_weight(perm[a], perm[b]));
                assert!((h.weight(a, b) - g.weight(perm[a], perm[b])).abs() < 1e-15);
            }
        }
        assert_eq!(build_graph(&d, &perm).unwrap(), h);
        assert_eq!(build_graph_with(&d, &perm, Exec::Parallel).unwrap(), h);
    }

    #[test]
    fn from_weights_validates() {
        assert!(FeatureGraph::from_weights(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).is_err());
        let g = FeatureGraph::from_weights(vec![vec![7.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(g.weight(0, 0), 0.0);
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn csv_export() {
        let g = FeatureGraph::from_weights(vec![vec![0.0, 0.25], vec![0.25, 0.0]]).unwrap();
        assert_eq!(g.to_csv(None), "feature,f0,f1\nf0,0,0.25\nf1,0.25,0\n");
    }
}
