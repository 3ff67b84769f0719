//! End-to-end search: relevance filter, feature graph, communities, then the
//! elitist generational GA.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::community::{CommunityDetector, Louvain, Partition};
use crate::dataset::SplitDataset;
use crate::error::Result;
use crate::ga::{self, Chromosome, Evaluation, FitnessContext, GaConfig};
use crate::graph::{self, FeatureGraph};
use crate::knn::{self, SubsetView};
use crate::relevance::RelevanceScores;
use crate::rng::{self, Stream};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub best_fitness: f64,
    pub best_validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunitySummary {
    pub detector: String,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub modularity: f64,
    /// Original feature indices of each community.
    pub members: Vec<Vec<usize>>,
}

/// Wall-clock time per phase. Kept out of the serialized report so reports
/// stay reproducible byte for byte.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub relevance: Duration,
    pub graph: Duration,
    pub communities: Duration,
    pub search: Duration,
    pub test_evaluation: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.relevance + self.graph + self.communities + self.search + self.test_evaluation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub variant: String,
    pub seed: u64,
    pub split_seed: u64,
    pub n_features: usize,
    pub n_filtered: usize,
    /// Fisher score of every original feature.
    pub fisher_scores: Vec<f64>,
    pub normalized_scores: Vec<f64>,
    /// Features kept by the relevance filter, best first.
    pub kept_features: Vec<usize>,
    pub communities: CommunitySummary,
    /// Original feature indices of the best chromosome, ascending.
    pub selected_features: Vec<usize>,
    pub selected_feature_names: Vec<String>,
    pub best_fitness: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Mean |Pearson| over pairs of selected features on the training set.
    pub selected_mean_raw_similarity: f64,
    /// First iteration whose best fitness equals the final best.
    pub iterations_to_best: usize,
    pub trace: Vec<TraceEntry>,
    pub config: GaConfig,
    #[serde(skip)]
    pub timings: Timings,
}

/// Snapshot handed to an observer once per evaluated generation.
pub struct Generation<'a> {
    pub iteration: usize,
    pub population: &'a [Chromosome],
    pub evaluations: &'a [Evaluation],
    pub partition: &'a Partition,
}

pub fn run_cdgafs(cfg: &GaConfig, split: &SplitDataset) -> Result<RunReport> {
    run_cdgafs_observed(cfg, split, |_| {})
}

/// Runs the full pipeline, calling `observer` after each generation is evaluated.
pub fn run_cdgafs_observed<F>(cfg: &GaConfig, split: &SplitDataset, mut observer: F) -> Result<RunReport>
where
    F: FnMut(&Generation<'_>),
{
    cfg.validate()?;
    let exec = cfg.exec;
    let train = &split.train;
    let mut timings = Timings::default();

    let started = Instant::now();
    let relevance = RelevanceScores::compute(train, cfg.filter_cap, exec)?;
    timings.relevance = started.elapsed();

    let started = Instant::now();
    let graph = graph::build_graph_with(train, &relevance.kept_indices, exec)?;
    timings.graph = started.elapsed();

    let started = Instant::now();
    let detector = Louvain;
    let detection = detector.detect(&graph, cfg.seed)?;
    let partition = detection.partition;
    timings.communities = started.elapsed();

    let started = Instant::now();
    let ctx = FitnessContext {
        graph: &graph,
        train,
        validation: &split.validation,
        k_nn: cfg.k_nn,
    };
    let mut population = ga::init_population(&partition, cfg);
    let mut breeding = rng::stream(cfg.seed, Stream::Breeding);
    let mut trace = Vec::with_capacity(cfg.max_iterations);
    let mut best = (population[0].clone(), Evaluation { fitness: 0.0, accuracy: 0.0 });

    for iteration in 0..cfg.max_iterations {
        debug_assert_eq!(population.len(), cfg.population_size);
        if cfg.repair_enabled {
            debug_assert!(population
                .iter()
                .all(|ch| ga::satisfies_quota(ch, &partition, cfg.omega)));
        }
        let evaluations = evaluate_population(&ctx, &population, cfg)?;
        observer(&Generation {
            iteration,
            population: &population,
            evaluations: &evaluations,
            partition: &partition,
        });

        let elite = fittest(&evaluations);
        best = (population[elite].clone(), evaluations[elite]);
        trace.push(TraceEntry {
            iteration,
            best_fitness: best.1.fitness,
            best_validation_accuracy: best.1.accuracy,
        });
        if iteration + 1 == cfg.max_iterations {
            break;
        }

        let fitnesses: Vec<f64> = evaluations.iter().map(|e| e.fitness).collect();
        let mut next = Vec::with_capacity(cfg.population_size);
        next.push(population[elite].clone());
        while next.len() < cfg.population_size {
            let a = ga::roulette_select(&fitnesses, &mut breeding)?;
            let b = ga::roulette_select(&fitnesses, &mut breeding)?;
            let (c1, c2) = ga::crossover(&population[a], &population[b], cfg, train.n_features(), &mut breeding)?;
            for child in [c1, c2] {
                if next.len() == cfg.population_size {
                    break;
                }
                let mut child = ga::mutate(&child, cfg, &mut breeding);
                if cfg.repair_enabled {
                    child = ga::repair(&child, &partition, cfg, &mut breeding)?;
                }
                next.push(child);
            }
        }
        population = next;
    }
    timings.search = started.elapsed();

    let started = Instant::now();
    let (best_chromosome, best_eval) = best;
    let selected_features = ctx.features(&best_chromosome);
    let test_accuracy = knn::classification_accuracy_with(
        &SubsetView::new(train, &selected_features)?,
        &SubsetView::new(&split.test, &selected_features)?,
        cfg.k_nn,
        exec,
    )?;
    timings.test_evaluation = started.elapsed();

    let final_best = trace.last().map_or(0.0, |t| t.best_fitness);
    let iterations_to_best = trace
        .iter()
        .position(|t| t.best_fitness == final_best)
        .unwrap_or(0);

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        variant: cfg.variant_name().to_string(),
        seed: cfg.seed,
        split_seed: split.split_seed,
        n_features: train.n_features(),
        n_filtered: graph.len(),
        fisher_scores: relevance.raw,
        normalized_scores: relevance.normalized,
        kept_features: relevance.kept_indices,
        communities: summarize(&graph, &partition, detector.name()),
        selected_feature_names: selected_features
            .iter()
            .map(|&j| train.feature_names()[j].clone())
            .collect(),
        selected_mean_raw_similarity: graph.mean_raw_similarity(&best_chromosome.selected()),
        selected_features,
        best_fitness: best_eval.fitness,
        validation_accuracy: best_eval.accuracy,
        test_accuracy,
        iterations_to_best,
        trace,
        config: cfg.clone(),
        timings,
    })
}

/// Evaluates each distinct gene vector once; chromosomes selecting nothing score zero.
fn evaluate_population(
    ctx: &FitnessContext<'_>,
    population: &[Chromosome],
    cfg: &GaConfig,
) -> Result<Vec<Evaluation>> {
    let mut slot: HashMap<&Chromosome, usize> = HashMap::new();
    let mut unique: Vec<&Chromosome> = Vec::new();
    let index: Vec<usize> = population
        .iter()
        .map(|ch| {
            *slot.entry(ch).or_insert_with(|| {
                unique.push(ch);
                unique.len() - 1
            })
        })
        .collect();
    let scored = cfg.exec.map(&unique, |ch| {
        if ch.count_selected() == 0 {
            Ok(Evaluation { fitness: 0.0, accuracy: 0.0 })
        } else {
            ctx.evaluate(ch)
        }
    });
    let scored: Vec<Evaluation> = scored.into_iter().collect::<Result<_>>()?;
    Ok(index.into_iter().map(|i| scored[i]).collect())
}

/// Index of the highest fitness; earliest wins ties.
fn fittest(evaluations: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in evaluations.iter().enumerate() {
        if e.fitness > evaluations[best].fitness {
            best = i;
        }
    }
    best
}

fn summarize(graph: &FeatureGraph, partition: &Partition, detector: &str) -> CommunitySummary {
    CommunitySummary {
        detector: detector.to_string(),
        k: partition.k(),
        sizes: partition.sizes(),
        modularity: partition.modularity().unwrap_or(0.0),
        members: partition
            .communities()
            .into_iter()
            .map(|nodes| nodes.into_iter().map(|i| graph.node_ids()[i]).collect())
            .collect(),
    }
}
