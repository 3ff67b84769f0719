use cdgafs::community::{CommunityDetector, Louvain, WeightedGraph};
use cdgafs::dataset::{self, Dataset};
use cdgafs::ga::{self, Chromosome, GaConfig};
use cdgafs::{modularity, FeatureGraph, Partition};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Symmetric weight matrix with a zero diagonal and positive total weight.
fn weight_matrix(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (3..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(0.01f64..1.0, n * (n - 1) / 2).prop_map(move |upper| {
            let mut w = vec![vec![0.0; n]; n];
            let mut it = upper.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let v = it.next().unwrap();
                    w[i][j] = v;
                    w[j][i] = v;
                }
            }
            w
        })
    })
}

fn partition_and_genes() -> impl Strategy<Value = (Vec<usize>, Vec<bool>, usize)> {
    (1..30usize).prop_flat_map(|n| {
        (
            proptest::collection::vec(0..6usize, n),
            proptest::collection::vec(any::<bool>(), n),
            1..4usize,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modularity_bounds(w in weight_matrix(12), labels in proptest::collection::vec(0..4usize, 12)) {
        let n = w.len();
        let g = FeatureGraph::from_weights(w).unwrap();
        let q = modularity(&g, &labels[..n]).unwrap();
        prop_assert!((-0.5 - 1e-12..=1.0).contains(&q));
        prop_assert!(modularity(&g, &vec![3; n]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn louvain_result_is_a_fixed_point(w in weight_matrix(14), seed in 0u64..1000) {
        let g = FeatureGraph::from_weights(w).unwrap();
        let detection = Louvain.detect(&g, seed).unwrap();
        let assignment = detection.partition.assignment().to_vec();
        let trace = detection.modularity_trace();
        prop_assert!(trace.windows(2).all(|p| p[1] >= p[0] - 1e-12));

        // one more pass over the collapsed graph finds nothing to merge
        let base = WeightedGraph::from_feature_graph(&g);
        let collapsed = base.aggregate(&assignment);
        let q = base.modularity(&assignment).unwrap();
        let singles: Vec<usize> = (0..collapsed.len()).collect();
        prop_assert!((collapsed.modularity(&singles).unwrap() - q).abs() < 1e-12);
        let again = Louvain.run(&collapsed, seed).unwrap();
        prop_assert_eq!(again.partition.k(), collapsed.len());
    }

    #[test]
    fn repair_meets_quota_and_is_idempotent((labels, genes, omega) in partition_and_genes(), seed: u64) {
        let part = Partition::from_assignment(&labels).unwrap();
        let cfg = GaConfig { omega, ..GaConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let repaired = ga::repair(&Chromosome::new(genes), &part, &cfg, &mut rng).unwrap();
        prop_assert!(ga::satisfies_quota(&repaired, &part, omega));
        prop_assert_eq!(ga::repair(&repaired, &part, &cfg, &mut rng).unwrap(), repaired);
    }

    #[test]
    fn crossover_only_exchanges_genes(
        a in proptest::collection::vec(any::<bool>(), 2..40),
        b_seed: u64,
        n_original in 1usize..60,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(b_seed);
        let b: Vec<bool> = a.iter().map(|g| !g).collect();
        let (p1, p2) = (Chromosome::new(a.clone()), Chromosome::new(b));
        let cfg = GaConfig { crossover_rate: 1.0, ..GaConfig::default() };
        let (c1, c2) = ga::crossover(&p1, &p2, &cfg, n_original, &mut rng).unwrap();
        let mut segments = 0;
        for i in 0..a.len() {
            // every position is either kept or swapped as a pair
            prop_assert_ne!(c1.get(i), c2.get(i));
            if i > 0 && (c1.get(i) == p1.get(i)) != (c1.get(i - 1) == p1.get(i - 1)) {
                segments += 1;
            }
        }
        prop_assert!(segments >= 1);
        let max_segments = if n_original < 20 { 1 } else { 2 };
        prop_assert!(segments <= max_segments);
    }

    #[test]
    fn split_is_a_stratified_partition(sizes in proptest::collection::vec(3usize..40, 2..4), seed: u64) {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let rows = (0..labels.len()).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(rows, labels.clone()).unwrap();
        let s = dataset::split(&d, dataset::DEFAULT_SPLIT, seed).unwrap();
        let mut all: Vec<usize> = [&s.train_indices, &s.validation_indices, &s.test_indices]
            .into_iter()
            .flatten()
            .copied()
            .collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for part in [&s.train, &s.validation, &s.test] {
            prop_assert!(part.class_counts().iter().all(|&n| n >= 1));
        }
    }
}
