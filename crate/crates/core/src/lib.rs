//! Hybrid filter/wrapper feature selection.
//!
//! Features are ranked by Fisher score, the most relevant are linked in a
//! complete graph weighted by absolute Pearson correlation, and Louvain
//! community detection groups redundant features. A genetic algorithm then
//! searches subsets scored by KNN accuracy over mean pairwise similarity,
//! with a repair operator that keeps a fixed number of features per
//! community.

pub mod community;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod ga;
pub mod graph;
pub mod knn;
pub mod pipeline;
pub mod relevance;
pub mod rng;
pub mod softmax;
pub mod synth;

pub use community::{detect_communities, modularity, CommunityDetector, Louvain, Partition};
pub use dataset::{impute_missing, load_csv, softmax_scale, split, Dataset, LabelColumn, SplitDataset};
pub use error::{Error, Result};
pub use exec::Exec;
pub use ga::{Chromosome, GaConfig};
pub use graph::{build_graph, pearson_similarity, FeatureGraph};
pub use knn::{classification_accuracy, knn_predict, SubsetView};
pub use pipeline::{run_cdgafs, RunReport, TraceEntry};
pub use relevance::{filter_irrelevant, fisher_scores, normalize_scores, subset_count, RelevanceScores};
