//! Brute-force k-nearest-neighbour classification on a feature subset.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default neighbour count.
pub const DEFAULT_K: usize = 5;

/// A dataset seen through a subset of its feature columns.
#[derive(Debug, Clone, Copy)]
pub struct SubsetView<'a> {
    source: &'a Dataset,
    selected: &'a [usize],
}

impl<'a> SubsetView<'a> {
    /// `selected` must be non-empty, strictly increasing and within the
    /// dataset's feature range.
    pub fn new(source: &'a Dataset, selected: &'a [usize]) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::invalid("feature subset is empty"));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("feature subset must be sorted and unique"));
        }
        if let Some(&last) = selected.last() {
            if last >= source.n_features() {
                return Err(Error::invalid(format!("feature index {last} out of range")));
            }
        }
        Ok(SubsetView { source, selected })
    }

    pub fn source(&self) -> &'a Dataset {
        self.source
    }

    pub fn selected(&self) -> &'a [usize] {
        self.selected
    }
}

/// Majority vote among the `k` nearest training patterns, measured by
/// Euclidean distance over the selected features of `query` (a full-width
/// pattern). Equal distances prefer the lower training index; tied votes
/// prefer the smaller class id.
pub fn knn_predict(train: &SubsetView<'_>, query: &[f64], k: usize) -> Result<usize> {
    check_k(train, k)?;
    if query.len() != train.source.n_features() {
        return Err(Error::invalid(format!(
            "query has {} values, expected {}",
            query.len(),
            train.source.n_features()
        )));
    }
    let projected = Projected::new(train);
    let q: Vec<f64> = train.selected.iter().map(|&j| query[j]).collect();
    Ok(projected.predict(&q, k, &mut Vec::with_capacity(k + 1)))
}

fn check_k(train: &SubsetView<'_>, k: usize) -> Result<()> {
    let p = train.source.n_patterns();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > p {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {p} training patterns"
        )));
    }
    Ok(())
}

/// Training patterns copied down to the selected columns, row-major.
struct Projected<'a> {
    values: Vec<f64>,
    width: usize,
    labels: &'a [usize],
    classes: usize,
}

impl<'a> Projected<'a> {
    fn new(view: &SubsetView<'a>) -> Self {
        let width = view.selected.len();
        let mut values = Vec::with_capacity(view.source.n_patterns() * width);
        for row in view.source.rows() {
            values.extend(view.selected.iter().map(|&j| row[j]));
        }
        Projected {
            values,
            width,
            labels: view.source.labels(),
            classes: view.source.class_count(),
        }
    }

    /// `nearest` is scratch space, kept sorted by (distance, index).
    fn predict(&self, query: &[f64], k: usize, nearest: &mut Vec<(f64, usize)>) -> usize {
        nearest.clear();
        for (i, pattern) in self.values.chunks_exact(self.width).enumerate() {
            let d: f64 = pattern
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            // indices arrive in increasing order, so an equal distance never displaces
            if nearest.len() == k && d >= nearest[k - 1].0 {
                continue;
            }
            let at = nearest.partition_point(|&(other, _)| other <= d);
            nearest.insert(at, (d, i));
            nearest.truncate(k);
        }

        let mut votes = vec![0usize; self.classes];
        for &(_, i) in nearest.iter() {
            votes[self.labels[i]] += 1;
        }
        // max_by_key keeps the last maximum; iterate in reverse so the smallest class wins ties
        votes
            .iter()
            .enumerate()
            .rev()
            .max_by_key(|&(_, &n)| n)
            .map(|(c, _)| c)
            .unwrap_or(0)
    }
}

pub fn classification_accuracy(
    train: &SubsetView<'_>,
    eval: &SubsetView<'_>,
    k: usize,
) -> Result<f64> {
    classification_accuracy_with(train, eval, k, Exec::Sequential)
}

/// Fraction of `eval` patterns whose prediction matches their label.
pub fn classification_accuracy_with(
    train: &SubsetView<'_>,
    eval: &SubsetView<'_>,
    k: usize,
    exec: Exec,
) -> Result<f64> {
    if train.selected != eval.selected {
        return Err(Error::invalid("train and eval views select different features"));
    }
    if train.source.n_features() != eval.source.n_features() {
        return Err(Error::invalid("train and eval datasets differ in width"));
    }
    let n_eval = eval.source.n_patterns();
    if n_eval == 0 {
        return Err(Error::invalid("evaluation set is empty"));
    }
    check_k(train, k)?;

    let projected = Projected::new(train);
    let queries = Projected::new(eval);
    let hit = |i: usize, scratch: &mut Vec<(f64, usize)>| {
        let q = &queries.values[i * queries.width..(i + 1) * queries.width];
        projected.predict(q, k, scratch) == queries.labels[i]
    };
    let hits = if exec.is_parallel() {
        exec.map_range(n_eval, |i| hit(i, &mut Vec::with_capacity(k + 1)))
            .into_iter()
            .filter(|&h| h)
            .count()
    } else {
        let mut scratch = Vec::with_capacity(k + 1);
        (0..n_eval).filter(|&i| hit(i, &mut scratch)).count()
    };
    Ok(hits as f64 / n_eval as f64)
}
