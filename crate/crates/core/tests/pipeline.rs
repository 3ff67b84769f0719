use cdgafs::dataset::{self, Dataset, SplitDataset, DEFAULT_SPLIT};
use cdgafs::ga::{self, GaConfig};
use cdgafs::pipeline::{run_cdgafs_observed, RunReport};
use cdgafs::synth::{self, SynthSpec};
use cdgafs::{run_cdgafs, Exec};

fn synthetic_split(seed: u64) -> SplitDataset {
    let data = synth::generate(&SynthSpec {
        patterns: 200,
        noise: 15,
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    dataset::split(&dataset::softmax_scale(&data).unwrap(), DEFAULT_SPLIT, seed).unwrap()
}

fn small_config(seed: u64) -> GaConfig {
    GaConfig {
        population_size: 30,
        max_iterations: 15,
        seed,
        ..GaConfig::default()
    }
}

fn json(report: &RunReport) -> String {
    serde_json::to_string(report).unwrap()
}

#[test]
fn generation_invariants_hold_throughout() {
    let split = synthetic_split(1);
    for repair_enabled in [true, false] {
        let cfg = GaConfig { repair_enabled, ..small_config(4) };
        let mut generations = 0;
        let report = run_cdgafs_observed(&cfg, &split, |generation| {
            assert_eq!(generation.iteration, generations);
            assert_eq!(generation.population.len(), cfg.population_size);
            assert_eq!(generation.evaluations.len(), cfg.population_size);
            if repair_enabled {
                for ch in generation.population {
                    assert!(ga::satisfies_quota(ch, generation.partition, cfg.omega));
                }
            }
            generations += 1;
        })
        .unwrap();

        assert_eq!(generations, cfg.max_iterations);
        assert_eq!(report.trace.len(), cfg.max_iterations);
        assert!(report.trace.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness));
        assert_eq!(report.trace.last().unwrap().best_fitness, report.best_fitness);
        assert_eq!(report.variant, if repair_enabled { "CDGAFS" } else { "GAFS" });
        let first_best = report.trace[report.iterations_to_best].best_fitness;
        assert_eq!(first_best, report.best_fitness);
    }
}

#[test]
fn cdgafs_selects_quota_per_community() {
    let split = synthetic_split(2);
    let report = run_cdgafs(&small_config(2), &split).unwrap();
    let expected: usize = report.communities.sizes.iter().map(|&s| s.min(1)).sum();
    assert_eq!(report.selected_features.len(), expected);
    for members in &report.communities.members {
        let hits = members.iter().filter(|f| report.selected_features.contains(f)).count();
        assert_eq!(hits, 1);
    }
}

#[test]
fn identical_inputs_give_identical_reports() {
    let split = synthetic_split(3);
    let a = run_cdgafs(&small_config(9), &split).unwrap();
    let b = run_cdgafs(&small_config(9), &split).unwrap();
    assert_eq!(json(&a), json(&b));

    let other = run_cdgafs(&small_config(10), &split).unwrap();
    assert_ne!(json(&a), json(&other));
}

#[test]
fn sequential_and_parallel_agree() {
    let split = synthetic_split(5);
    let seq = run_cdgafs(&GaConfig { exec: Exec::Sequential, ..small_config(5) }, &split).unwrap();
    let par = run_cdgafs(&GaConfig { exec: Exec::Parallel, ..small_config(5) }, &split).unwrap();
    assert_eq!(json(&seq), json(&par));
}

#[test]
fn perfectly_separating_feature_is_found() {
    // feature 0 equals the class; the others are unrelated noise
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..120usize {
        let label = i % 2;
        let noise = |m: usize| ((i * 37 + m * 101) % 53) as f64 / 53.0;
        rows.push(vec![label as f64, noise(1), noise(2), noise(3), noise(4), noise(5)]);
        labels.push(label);
    }
    let data = Dataset::from_rows(rows, labels).unwrap();
    let split = dataset::split(&dataset::softmax_scale(&data).unwrap(), DEFAULT_SPLIT, 0).unwrap();
    let cfg = GaConfig { k_nn: 1, ..small_config(0) };
    let report = run_cdgafs(&cfg, &split).unwrap();
    assert!(report.selected_features.contains(&0), "{:?}", report.selected_features);
    assert_eq!(report.test_accuracy, 1.0);
}

#[test]
fn report_covers_every_original_feature() {
    let split = synthetic_split(6);
    let cfg = GaConfig { filter_cap: 12, ..small_config(6) };
    let report = run_cdgafs(&cfg, &split).unwrap();
    assert_eq!(report.fisher_scores.len(), report.n_features);
    assert_eq!(report.normalized_scores.len(), report.n_features);
    assert_eq!(report.kept_features.len(), 12);
    assert_eq!(report.n_filtered, 12);
    let mut members: Vec<usize> = report.communities.members.concat();
    members.sort_unstable();
    let mut kept = report.kept_features.clone();
    kept.sort_unstable();
    assert_eq!(members, kept);
    assert!(report.selected_features.iter().all(|f| kept.contains(f)));
}

#[test]
fn invalid_configuration_is_rejected() {
    let split = synthetic_split(7);
    for cfg in [
        GaConfig { population_size: 1, ..small_config(0) },
        GaConfig { crossover_rate: 1.5, ..small_config(0) },
        GaConfig { omega: 0, ..small_config(0) },
        GaConfig { k_nn: 0, ..small_config(0) },
        GaConfig { max_iterations: 0, ..small_config(0) },
    ] {
        assert!(run_cdgafs(&cfg, &split).is_err(), "{cfg:?}");
    }
}
