//! Command implementations behind the `cdgafs` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cdgafs::dataset::{self, Dataset, LabelColumn};
use cdgafs::ga::GaConfig;
use cdgafs::pipeline::{self, RunReport, TraceEntry, SCHEMA_VERSION};
use cdgafs::relevance::{self, RelevanceScores};
use cdgafs::synth::{self, SynthSpec};
use cdgafs::{graph, Exec};
use clap::{Args, Parser, Subcommand};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "cdgafs", version, about = "Community-detection guided genetic feature selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select features on a dataset and write report.json and trace.csv.
    Run(RunArgs),
    /// Run with and without the repair operator on identical seeds.
    Ablate(RunArgs),
    /// Write a synthetic redundancy benchmark CSV.
    Synth(SynthArgs),
    /// Print dataset statistics.
    Info(DataArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV dataset.
    #[arg(long)]
    pub data: PathBuf,
    /// Label column: header name or 0-based index (default: last column).
    #[arg(long)]
    pub label: Option<LabelColumn>,
}

impl DataArgs {
    fn label(&self) -> LabelColumn {
        self.label.clone().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Features selected per community.
    #[arg(long, default_value_t = 1)]
    pub omega: usize,
    /// Neighbours for the KNN classifier.
    #[arg(long, default_value_t = cdgafs::knn::DEFAULT_K)]
    pub knn: usize,
    #[arg(long, default_value_t = 100)]
    pub pop: usize,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.8)]
    pub cx_rate: f64,
    #[arg(long, default_value_t = 0.05)]
    pub mut_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Train,validation,test proportions.
    #[arg(long, value_parser = parse_split, default_value = "0.6,0.2,0.2")]
    pub split: [f64; 3],
    /// Maximum number of features kept by the relevance filter.
    #[arg(long, default_value_t = relevance::DEFAULT_FILTER_CAP)]
    pub filter_cap: usize,
    /// Skip the repair operator.
    #[arg(long)]
    pub no_repair: bool,
    /// Also write the normalized feature graph as graph.csv.
    #[arg(long)]
    pub export_graph: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn ga_config(&self, seed: u64) -> GaConfig {
        GaConfig {
            crossover_rate: self.cx_rate,
            mutation_rate: self.mut_rate,
            population_size: self.pop,
            max_iterations: self.iters,
            omega: self.omega,
            k_nn: self.knn,
            seed,
            repair_enabled: !self.no_repair,
            filter_cap: self.filter_cap,
            exec: Exec::Parallel,
        }
    }

    fn validate(&self) -> Result<()> {
        self.ga_config(self.seed).validate()?;
        if self.repeats < 1 {
            bail!("--repeats must be at least 1");
        }
        if self.split.iter().any(|r| r.is_nan() || *r <= 0.0) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bail!("--split must be three positive fractions summing to 1");
        }
        Ok(())
    }

    fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|i| self.seed + i).collect()
    }
}

fn parse_split(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| "expected three comma-separated fractions".to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of near-duplicate feature groups.
    #[arg(long, default_value_t = 5)]
    pub groups: usize,
    #[arg(long, default_value_t = 5)]
    pub group_size: usize,
    /// Number of pure-noise features.
    #[arg(long, default_value_t = 25)]
    pub noise: usize,
    #[arg(long, default_value_t = 400)]
    pub patterns: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file.
    #[arg(long, default_value = "synth.csv")]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn spec(&self) -> SynthSpec {
        SynthSpec {
            groups: self.groups,
            group_size: self.group_size,
            noise: self.noise,
            patterns: self.patterns,
            seed: self.seed,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Info(args) => cmd_info(args),
    }
}

/// Load, impute and scale.
pub fn prepare(data: &DataArgs) -> Result<Dataset> {
    let raw = dataset::load_csv(&data.data, &data.label())?;
    let imputed = dataset::impute_missing(&raw)?;
    Ok(dataset::softmax_scale(&imputed)?)
}

fn run_seed(args: &RunArgs, data: &Dataset, seed: u64, repair: bool) -> Result<RunReport> {
    let split = dataset::split(data, args.split, seed)?;
    let cfg = GaConfig {
        repair_enabled: repair,
        ..args.ga_config(seed)
    };
    Ok(pipeline::run_cdgafs(&cfg, &split)?)
}

/// Runs every seed, in parallel when available; results are in seed order.
fn run_seeds(args: &RunArgs, data: &Dataset, repair: bool) -> Result<Vec<RunReport>> {
    let seeds = args.seeds();
    #[cfg(feature = "parallel")]
    let reports = seeds.par_iter().map(|&s| run_seed(args, data, s, repair)).collect();
    #[cfg(not(feature = "parallel"))]
    let reports = seeds.iter().map(|&s| run_seed(args, data, s, repair)).collect();
    reports
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `mean (std)` with two decimals, e.g. `88.73 (3.76)`.
pub fn format_mean_std(values: &[f64]) -> String {
    let (mean, std) = mean_std(values);
    format!("{mean:.2} ({std:.2})")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub test_accuracy_percent_mean: f64,
    pub test_accuracy_percent_std: f64,
    pub test_accuracy: String,
    pub subset_size_mean: f64,
    pub subset_size_std: f64,
    pub subset_size: String,
}

impl Aggregate {
    pub fn of(reports: &[RunReport]) -> Self {
        let accuracy: Vec<f64> = reports.iter().map(|r| 100.0 * r.test_accuracy).collect();
        let sizes: Vec<f64> = reports.iter().map(|r| r.selected_features.len() as f64).collect();
        let (acc_mean, acc_std) = mean_std(&accuracy);
        let (size_mean, size_std) = mean_std(&sizes);
        Aggregate {
            runs: reports.len(),
            test_accuracy_percent_mean: acc_mean,
            test_accuracy_percent_std: acc_std,
            test_accuracy: format_mean_std(&accuracy),
            subset_size_mean: size_mean,
            subset_size_std: size_std,
            subset_size: format_mean_std(&sizes),
        }
    }
}

#[derive(Debug, Serialize)]
struct RepeatReport<'a> {
    schema_version: u32,
    seeds: Vec<u64>,
    aggregate: Aggregate,
    runs: &'a [RunReport],
}

pub fn trace_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("iteration,best_fitness,best_validation_accuracy\n");
    for t in trace {
        let _ = writeln!(out, "{},{},{}", t.iteration, t.best_fitness, t.best_validation_accuracy);
    }
    out
}

fn timings_json(reports: &[RunReport]) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        variant: String,
        seed: u64,
        relevance_s: f64,
        graph_s: f64,
        communities_s: f64,
        search_s: f64,
        test_evaluation_s: f64,
        total_s: f64,
    }
    let rows: Vec<Row> = reports
        .iter()
        .map(|r| Row {
            variant: r.variant.clone(),
            seed: r.seed,
            relevance_s: r.timings.relevance.as_secs_f64(),
            graph_s: r.timings.graph.as_secs_f64(),
            communities_s: r.timings.communities.as_secs_f64(),
            search_s: r.timings.search.as_secs_f64(),
            test_evaluation_s: r.timings.test_evaluation.as_secs_f64(),
            total_s: r.timings.total().as_secs_f64(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

fn graph_csv(args: &RunArgs, data: &Dataset) -> Result<String> {
    let split = dataset::split(data, args.split, args.seed)?;
    let scores = RelevanceScores::compute(&split.train, args.filter_cap, Exec::Parallel)?;
    let g = graph::build_graph_with(&split.train, &scores.kept_indices, Exec::Parallel)?;
    Ok(g.to_csv(Some(split.train.feature_names())))
}

/// Writes every file or none: contents go to temporary names first and are
/// renamed once all writes succeeded.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut staged = Vec::new();
    let result = (|| -> Result<()> {
        for (name, contents) in files {
            let tmp = dir.join(format!(".{name}.partial"));
            staged.push(tmp.clone());
            fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
        }
        for (name, _) in files {
            let tmp = dir.join(format!(".{name}.partial"));
            fs::rename(&tmp, dir.join(name)).with_context(|| format!("writing {name}"))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for tmp in staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}

pub fn cmd_run(args: &RunArgs) -> Result<String> {
    args.validate()?;
    let data = prepare(&args.data)?;
    let reports = run_seeds(args, &data, !args.no_repair)?;

    let mut files = Vec::new();
    let mut summary = String::new();
    if let [report] = reports.as_slice() {
        files.push(("report.json".into(), serde_json::to_string_pretty(report)? + "\n"));
        let _ = writeln!(
            summary,
            "{}: {} features selected {:?}, validation accuracy {:.4}, test accuracy {:.4}, k = {}",
            report.variant,
            report.selected_features.len(),
            report.selected_feature_names,
            report.validation_accuracy,
            report.test_accuracy,
            report.communities.k
        );
    } else {
        let aggregate = Aggregate::of(&reports);
        let _ = writeln!(
            summary,
            "{} over {} runs: test accuracy {}, selected features {}",
            reports[0].variant, aggregate.runs, aggregate.test_accuracy, aggregate.subset_size
        );
        let doc = RepeatReport {
            schema_version: SCHEMA_VERSION,
            seeds: args.seeds(),
            aggregate,
            runs: &reports,
        };
        files.push(("report.json".into(), serde_json::to_string_pretty(&doc)? + "\n"));
        for r in &reports {
            files.push((format!("trace_seed{}.csv", r.seed), trace_csv(&r.trace)));
        }
    }
    files.push(("trace.csv".into(), trace_csv(&reports[0].trace)));
    files.push(("timings.json".into(), timings_json(&reports)?));
    if args.export_graph {
        files.push(("graph.csv".into(), graph_csv(args, &data)?));
    }
    write_outputs(&args.out, &files)?;
    Ok(summary)
}

/// Per-variant outcome of one ablation seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantOutcome {
    pub seed: u64,
    pub best_fitness: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub selected_count: usize,
    pub mean_raw_similarity: f64,
    pub iterations_to_best: usize,
}

impl From<&RunReport> for VariantOutcome {
    fn from(r: &RunReport) -> Self {
        VariantOutcome {
            seed: r.seed,
            best_fitness: r.best_fitness,
            validation_accuracy: r.validation_accuracy,
            test_accuracy: r.test_accuracy,
            selected_count: r.selected_features.len(),
            mean_raw_similarity: r.selected_mean_raw_similarity,
            iterations_to_best: r.iterations_to_best,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummary {
    pub schema_version: u32,
    pub cdgafs: Vec<VariantOutcome>,
    pub gafs: Vec<VariantOutcome>,
    pub cdgafs_test_accuracy: String,
    pub gafs_test_accuracy: String,
    pub cdgafs_mean_raw_similarity: f64,
    pub gafs_mean_raw_similarity: f64,
    /// Seeds where the repaired search selected a strictly less redundant subset.
    pub cdgafs_less_redundant: usize,
    /// Seeds where the repaired search reached its final best in fewer iterations.
    pub cdgafs_faster: usize,
}

impl AblationSummary {
    pub fn new(cdgafs: &[RunReport], gafs: &[RunReport]) -> Self {
        let percent = |rs: &[RunReport]| rs.iter().map(|r| 100.0 * r.test_accuracy).collect::<Vec<_>>();
        let similarity = |rs: &[RunReport]| {
            rs.iter().map(|r| r.selected_mean_raw_similarity).sum::<f64>() / rs.len() as f64
        };
        let pairs = || cdgafs.iter().zip(gafs);
        AblationSummary {
            schema_version: SCHEMA_VERSION,
            cdgafs: cdgafs.iter().map(VariantOutcome::from).collect(),
            gafs: gafs.iter().map(VariantOutcome::from).collect(),
            cdgafs_test_accuracy: format_mean_std(&percent(cdgafs)),
            gafs_test_accuracy: format_mean_std(&percent(gafs)),
            cdgafs_mean_raw_similarity: similarity(cdgafs),
            gafs_mean_raw_similarity: similarity(gafs),
            cdgafs_less_redundant: pairs()
                .filter(|(c, g)| c.selected_mean_raw_similarity < g.selected_mean_raw_similarity)
                .count(),
            cdgafs_faster: pairs()
                .filter(|(c, g)| c.iterations_to_best < g.iterations_to_best)
                .count(),
        }
    }
}

pub fn ablation_csv(cdgafs: &[RunReport], gafs: &[RunReport]) -> String {
    let mut out = String::from("variant,seed,iteration,best_fitness,best_validation_accuracy\n");
    for r in cdgafs.iter().chain(gafs) {
        for t in &r.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.variant, r.seed, t.iteration, t.best_fitness, t.best_validation_accuracy
            );
        }
    }
    out
}

pub fn cmd_ablate(args: &RunArgs) -> Result<String> {
    args.validate()?;
    let data = prepare(&args.data)?;
    let cdgafs = run_seeds(args, &data, true)?;
    let gafs = run_seeds(args, &data, false)?;
    let summary = AblationSummary::new(&cdgafs, &gafs);

    let mut text = String::new();
    let _ = writeln!(
        text,
        "CDGAFS test accuracy {}, mean raw similarity {:.4}",
        summary.cdgafs_test_accuracy, summary.cdgafs_mean_raw_similarity
    );
    let _ = writeln!(
        text,
        "GAFS   test accuracy {}, mean raw similarity {:.4}",
        summary.gafs_test_accuracy, summary.gafs_mean_raw_similarity
    );
    let _ = writeln!(
        text,
        "CDGAFS less redundant on {}/{} seeds, converged faster on {}/{}",
        summary.cdgafs_less_redundant,
        cdgafs.len(),
        summary.cdgafs_faster,
        cdgafs.len()
    );

    let all: Vec<RunReport> = cdgafs.iter().chain(&gafs).cloned().collect();
    let files = vec![
        ("ablation.csv".to_string(), ablation_csv(&cdgafs, &gafs)),
        ("ablation.json".to_string(), serde_json::to_string_pretty(&summary)? + "\n"),
        ("timings.json".to_string(), timings_json(&all)?),
    ];
    write_outputs(&args.out, &files)?;
    Ok(text)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<String> {
    let spec = args.spec();
    let data = synth::generate(&spec)?;
    let weakest = synth::min_group_similarity(&data, &spec)?;
    let csv = synth::to_csv(&data);
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let tmp = args.out.with_extension("partial");
    fs::write(&tmp, csv).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(format!(
        "wrote {} ({} patterns, {} features; min within-group |r| = {weakest:.4})\n",
        args.out.display(),
        data.n_patterns(),
        data.n_features()
    ))
}

pub fn cmd_info(args: &DataArgs) -> Result<String> {
    let d = dataset::load_csv(&args.data, &args.label())?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "features: {}, classes: {}, patterns: {}",
        d.n_features(),
        d.class_count(),
        d.n_patterns()
    );
    let _ = writeln!(out, "missing: {}", d.missing_count());
    let counts: Vec<String> = d
        .class_names()
        .iter()
        .zip(d.class_counts())
        .map(|(name, n)| format!("{name}={n}"))
        .collect();
    let _ = writeln!(out, "class counts: {}", counts.join(", "));
    let _ = writeln!(
        out,
        "search space: 2^{} = {}",
        d.n_features(),
        relevance::subset_count(d.n_features())
    );
    Ok(out)
}
