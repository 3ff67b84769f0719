//! Synthetic redundancy benchmark: groups of near-duplicate informative
//! features plus independent noise, with balanced binary labels.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::pearson_similarity;
use crate::rng::{self, Stream};

/// Minimum |Pearson| required between members of one group.
pub const MIN_GROUP_SIMILARITY: f64 = 0.95;

const JITTER_SD: f64 = 0.1;
const SIGNAL_SHIFT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthSpec {
    pub groups: usize,
    pub group_size: usize,
    pub noise: usize,
    pub patterns: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            groups: 5,
            group_size: 5,
            noise: 25,
            patterns: 400,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.groups < 1 {
            return Err(Error::invalid("need at least one feature group"));
        }
        if self.group_size < 2 {
            return Err(Error::invalid("groups need at least two features"));
        }
        if self.patterns < 6 {
            return Err(Error::invalid("need at least six patterns"));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.groups * self.group_size + self.noise
    }

    /// Original feature indices of group `g`.
    pub fn group_members(&self, g: usize) -> std::ops::Range<usize> {
        g * self.group_size..(g + 1) * self.group_size
    }
}

/// Each pattern carries its class in one uniformly chosen "active" group:
/// that group's latent is `SIGNAL_SHIFT * (±1) + N(0, 1)` with the sign given
/// by the class, every other latent is `N(0, 1)`. Each latent is therefore
/// class-correlated while distinct groups stay uncorrelated. Members add
/// independent jitter. Values are rounded to six decimals so the written CSV
/// reloads to the identical dataset.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Stream::Synth);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let jitter = Normal::new(0.0, JITTER_SD).expect("valid normal");
    let round = |v: f64| (v * 1e6).round() / 1e6;

    let labels: Vec<usize> = (0..spec.patterns).map(|i| i % 2).collect();
    let mut rows = Vec::with_capacity(spec.patterns);
    for &label in &labels {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let active = rng.random_range(0..spec.groups);
        let mut row = Vec::with_capacity(spec.n_features());
        for g in 0..spec.groups {
            let shift = if g == active { SIGNAL_SHIFT * sign } else { 0.0 };
            let latent = shift + unit.sample(&mut rng);
            for _ in 0..spec.group_size {
                row.push(round(latent + jitter.sample(&mut rng)));
            }
        }
        for _ in 0..spec.noise {
            row.push(round(unit.sample(&mut rng)));
        }
        rows.push(row);
    }

    let mut names = Vec::with_capacity(spec.n_features());
    for g in 0..spec.groups {
        names.extend((0..spec.group_size).map(|m| format!("g{g}_{m}")));
    }
    names.extend((0..spec.noise).map(|j| format!("noise{j}")));
    let dataset = Dataset::new(rows, labels, names, vec!["0".into(), "1".into()])?;

    let weakest = min_group_similarity(&dataset, spec)?;
    if weakest <= MIN_GROUP_SIMILARITY {
        return Err(Error::invalid(format!(
            "generated groups are not near-duplicates (min |r| = {weakest:.4})"
        )));
    }
    Ok(dataset)
}

/// Smallest |Pearson| between two members of the same group.
pub fn min_group_similarity(dataset: &Dataset, spec: &SynthSpec) -> Result<f64> {
    let mut weakest: f64 = 1.0;
    for g in 0..spec.groups {
        let members: Vec<usize> = spec.group_members(g).collect();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                weakest = weakest.min(pearson_similarity(&dataset.column(i), &dataset.column(j))?);
            }
        }
    }
    Ok(weakest)
}

/// CSV text with a header row and the label in the last column.
pub fn to_csv(dataset: &Dataset) -> String {
    let mut out = dataset.feature_names().join(",");
    out.push_str(",label\n");
    for (row, &label) in dataset.rows().zip(dataset.labels()) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        out.push_str(&dataset.class_names()[label]);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_groups() {
        let spec = SynthSpec { groups: 4, group_size: 5, noise: 10, patterns: 300, seed: 3 };
        let d = generate(&spec).unwrap();
        assert_eq!(d.n_features(), 30);
        assert_eq!(d.n_patterns(), 300);
        assert_eq!(d.class_counts(), vec![150, 150]);
        assert!(min_group_similarity(&d, &spec).unwrap() > MIN_GROUP_SIMILARITY);
    }

    #[test]
    fn noise_free() {
        let spec = SynthSpec { groups: 2, group_size: 3, noise: 0, patterns: 50, seed: 1 };
        let d = generate(&spec).unwrap();
        assert_eq!(d.n_features(), 6);
        assert!(d.feature_names().iter().all(|n| n.starts_with('g')));
    }

    #[test]
    fn deterministic_text() {
        let spec = SynthSpec::default();
        assert_eq!(to_csv(&generate(&spec).unwrap()), to_csv(&generate(&spec).unwrap()));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(generate(&SynthSpec { groups: 0, ..SynthSpec::default() }).is_err());
        assert!(generate(&SynthSpec { group_size: 1, ..SynthSpec::default() }).is_err());
    }
}
