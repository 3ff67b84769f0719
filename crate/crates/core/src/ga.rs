//! Genetic operators for community-constrained feature selection.
//!
//! A chromosome has one gene per node of the feature graph. The repair
//! operator forces every community `c` to contribute exactly
//! `min(omega, |c|)` selected genes.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::community::Partition;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::graph::FeatureGraph;
use crate::knn::{self, SubsetView};
use crate::relevance::DEFAULT_FILTER_CAP;
use crate::rng::{self, Stream};

/// Mean similarity used for single-feature subsets and as a lower clamp.
pub const SIMILARITY_FLOOR: f64 = 1e-6;

/// Feature counts below this use single-point crossover, otherwise two-point.
pub const TWO_POINT_THRESHOLD: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Chromosome(Vec<bool>);

impl Chromosome {
    pub fn new(genes: Vec<bool>) -> Self {
        Chromosome(genes)
    }

    pub fn zeros(len: usize) -> Self {
        Chromosome(vec![false; len])
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bits(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("invalid gene {other:?}"))),
            })
            .collect::<Result<_>>()
            .map(Chromosome)
    }

    pub fn genes(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn count_selected(&self) -> usize {
        self.0.iter().filter(|&&g| g).count()
    }

    /// Indices of selected genes, ascending.
    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &g)| g.then_some(i))
            .collect()
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &g in &self.0 {
            f.write_str(if g { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Search parameters. Defaults follow the reference GA settings:
/// crossover 0.8, mutation 0.05, 100 chromosomes, 100 iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub population_size: usize,
    pub max_iterations: usize,
    pub omega: usize,
    pub k_nn: usize,
    pub seed: u64,
    pub repair_enabled: bool,
    pub filter_cap: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            crossover_rate: 0.8,
            mutation_rate: 0.05,
            population_size: 100,
            max_iterations: 100,
            omega: 1,
            k_nn: knn::DEFAULT_K,
            seed: 0,
            repair_enabled: true,
            filter_cap: DEFAULT_FILTER_CAP,
            exec: Exec::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        if self.population_size < 2 {
            return Err(Error::invalid("population size must be at least 2"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("iteration count must be at least 1"));
        }
        if self.omega < 1 {
            return Err(Error::invalid("omega must be at least 1"));
        }
        if self.k_nn < 1 {
            return Err(Error::invalid("k for KNN must be at least 1"));
        }
        if self.filter_cap < 2 {
            return Err(Error::invalid("filter cap must be at least 2"));
        }
        Ok(())
    }

    pub fn variant_name(&self) -> &'static str {
        if self.repair_enabled {
            "CDGAFS"
        } else {
            "GAFS"
        }
    }
}

/// Per-community selection quota `min(omega, |c|)`.
pub fn quotas(part: &Partition, omega: usize) -> Vec<usize> {
    part.sizes().into_iter().map(|s| s.min(omega)).collect()
}

pub fn satisfies_quota(ch: &Chromosome, part: &Partition, omega: usize) -> bool {
    let mut counts = vec![0; part.k()];
    for i in ch.selected() {
        counts[part.assignment()[i]] += 1;
    }
    counts == quotas(part, omega)
}

/// Random population where every chromosome meets the community quota.
pub fn init_population(part: &Partition, cfg: &GaConfig) -> Vec<Chromosome> {
    let mut rng = rng::stream(cfg.seed, Stream::Init);
    init_population_with(part, cfg, &mut rng)
}

pub fn init_population_with<R: Rng + ?Sized>(
    part: &Partition,
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<Chromosome> {
    let communities = part.communities();
    (0..cfg.population_size)
        .map(|_| {
            let mut ch = Chromosome::zeros(part.len());
            for members in &communities {
                let q = members.len().min(cfg.omega);
                for pick in index::sample(rng, members.len(), q) {
                    ch.set(members[pick], true);
                }
            }
            ch
        })
        .collect()
}

/// Fitness of a chromosome together with its validation accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub accuracy: f64,
}

/// Everything needed to score a chromosome: accuracy divided by the mean
/// normalized pairwise similarity of the selected features.
#[derive(Debug, Clone, Copy)]
pub struct FitnessContext<'a> {
    pub graph: &'a FeatureGraph,
    pub train: &'a Dataset,
    pub validation: &'a Dataset,
    pub k_nn: usize,
}

impl FitnessContext<'_> {
    /// Original dataset feature indices of the selected genes, ascending.
    pub fn features(&self, ch: &Chromosome) -> Vec<usize> {
        let mut features: Vec<usize> = ch.selected().iter().map(|&i| self.graph.node_ids()[i]).collect();
        features.sort_unstable();
        features
    }

    pub fn evaluate(&self, ch: &Chromosome) -> Result<Evaluation> {
        if ch.len() != self.graph.len() {
            return Err(Error::invalid(format!(
                "chromosome has {} genes, graph has {} nodes",
                ch.len(),
                self.graph.len()
            )));
        }
        let nodes = ch.selected();
        if nodes.is_empty() {
            return Err(Error::invalid("chromosome selects no features"));
        }
        let features = self.features(ch);
        let accuracy = knn::classification_accuracy(
            &SubsetView::new(self.train, &features)?,
            &SubsetView::new(self.validation, &features)?,
            self.k_nn,
        )?;
        let similarity = if nodes.len() == 1 {
            SIMILARITY_FLOOR
        } else {
            self.graph.mean_similarity(&nodes).max(SIMILARITY_FLOOR)
        };
        Ok(Evaluation {
            fitness: accuracy / similarity,
            accuracy,
        })
    }
}

pub fn fitness(
    ch: &Chromosome,
    graph: &FeatureGraph,
    train: &Dataset,
    validation: &Dataset,
    cfg: &GaConfig,
) -> Result<f64> {
    let ctx = FitnessContext {
        graph,
        train,
        validation,
        k_nn: cfg.k_nn,
    };
    Ok(ctx.evaluate(ch)?.fitness)
}

/// Fitness-proportionate choice; uniform when every fitness is zero.
pub fn roulette_select<R: Rng + ?Sized>(fitnesses: &[f64], rng: &mut R) -> Result<usize> {
    if fitnesses.is_empty() {
        return Err(Error::invalid("cannot select from an empty population"));
    }
    if let Some(bad) = fitnesses.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(Error::invalid(format!("fitness {bad} is not a non-negative number")));
    }
    let total: f64 = fitnesses.iter().sum();
    if total == 0.0 {
        return Ok(rng.random_range(0..fitnesses.len()));
    }
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &f) in fitnesses.iter().enumerate() {
        if f > 0.0 {
            cumulative += f;
            last_positive = i;
            if target < cumulative {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}

/// Exchanges genes `cut..` between the parents.
pub fn single_point(p1: &Chromosome, p2: &Chromosome, cut: usize) -> (Chromosome, Chromosome) {
    two_point(p1, p2, cut, p1.len())
}

/// Exchanges genes `start..end` between the parents.
pub fn two_point(
    p1: &Chromosome,
    p2: &Chromosome,
    start: usize,
    end: usize,
) -> (Chromosome, Chromosome) {
    let mut a = p1.clone();
    let mut b = p2.clone();
    a.0[start..end].copy_from_slice(&p2.0[start..end]);
    b.0[start..end].copy_from_slice(&p1.0[start..end]);
    (a, b)
}

/// With probability `crossover_rate`, recombines the parents: single-point
/// when the dataset has fewer than 20 original features, two-point
/// otherwise. Cut points fall strictly inside the chromosome.
pub fn crossover<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    cfg: &GaConfig,
    n_original: usize,
    rng: &mut R,
) -> Result<(Chromosome, Chromosome)> {
    if p1.len() != p2.len() {
        return Err(Error::invalid("parents differ in length"));
    }
    let len = p1.len();
    if !rng.random_bool(cfg.crossover_rate) || len < 2 {
        return Ok((p1.clone(), p2.clone()));
    }
    // len - 1 interior cut positions: 1..len
    if n_original < TWO_POINT_THRESHOLD || len < 3 {
        let cut = rng.random_range(1..len);
        return Ok(single_point(p1, p2, cut));
    }
    let picks = index::sample(rng, len - 1, 2);
    let (x, y) = (picks.index(0) + 1, picks.index(1) + 1);
    Ok(two_point(p1, p2, x.min(y), x.max(y)))
}

/// Flips each gene independently with probability `mutation_rate`.
pub fn mutate<R: Rng + ?Sized>(ch: &Chromosome, cfg: &GaConfig, rng: &mut R) -> Chromosome {
    Chromosome(
        ch.0.iter()
            .map(|&g| if rng.random_bool(cfg.mutation_rate) { !g } else { g })
            .collect(),
    )
}

/// Restores the per-community quota.
///
/// Under-quota communities gain uniformly chosen unselected members;
/// over-quota communities keep a uniformly chosen `min(omega, |c|)` of their
/// selected members. Communities already at quota are untouched.
pub fn repair<R: Rng + ?Sized>(
    ch: &Chromosome,
    part: &Partition,
    cfg: &GaConfig,
    rng: &mut R,
) -> Result<Chromosome> {
    if ch.len() != part.len() {
        return Err(Error::invalid(format!(
            "chromosome has {} genes, partition covers {} nodes",
            ch.len(),
            part.len()
        )));
    }
    let mut out = ch.clone();
    for members in part.communities() {
        let quota = members.len().min(cfg.omega);
        let (on, off): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| ch.get(i));
        if on.len() < quota {
            for pick in index::sample(rng, off.len(), quota - on.len()) {
                out.set(off[pick], true);
            }
        } else if on.len() > quota {
            for &i in &on {
                out.set(i, false);
            }
            for pick in index::sample(rng, on.len(), quota) {
                out.set(on[pick], true);
            }
        }
    }
    Ok(out)
}
