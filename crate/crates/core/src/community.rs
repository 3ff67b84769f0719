//! Modularity and Louvain community detection on dense weighted graphs.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::FeatureGraph;
use crate::rng::{self, Stream};

/// Assignment of graph nodes to communities `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
    modularity: Option<f64>,
}

impl Partition {
    /// Relabels community ids densely in order of first appearance.
    pub fn from_assignment(assignment: &[usize]) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::invalid("partition of an empty node set"));
        }
        let (assignment, k) = relabel(assignment);
        Ok(Partition {
            assignment,
            k,
            modularity: None,
        })
    }

    /// Like [`Partition::from_assignment`], recording the modularity on `g`.
    pub fn evaluate(g: &FeatureGraph, assignment: &[usize]) -> Result<Self> {
        if assignment.len() != g.len() {
            return Err(Error::invalid(format!(
                "assignment covers {} nodes, graph has {}",
                assignment.len(),
                g.len()
            )));
        }
        let mut part = Partition::from_assignment(assignment)?;
        part.modularity = Some(modularity(g, &part.assignment)?);
        Ok(part)
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n).collect(),
            k: n,
            modularity: None,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Modularity recorded at construction, if the partition was built against a graph.
    pub fn modularity(&self) -> Option<f64> {
        self.modularity
    }

    /// Node lists per community, each in ascending node order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }
}

fn relabel(assignment: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::HashMap::new();
    let dense = assignment
        .iter()
        .map(|&c| {
            let next = map.len();
            *map.entry(c).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

/// Weighted modularity of an assignment over the normalized, off-diagonal
/// weights of `g`.
pub fn modularity(g: &FeatureGraph, assignment: &[usize]) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::invalid("modularity of an empty graph"));
    }
    if assignment.len() != g.len() {
        return Err(Error::invalid(format!(
            "assignment covers {} nodes, graph has {}",
            assignment.len(),
            g.len()
        )));
    }
    WeightedGraph::from_feature_graph(g).modularity(assignment)
}

/// Dense symmetric weight matrix that may carry self-loops.
///
/// Self-loop entries hold the summed weight of both directions, so
/// aggregated graphs preserve modularity exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl WeightedGraph {
    pub fn from_feature_graph(g: &FeatureGraph) -> Self {
        let n = g.len();
        let weights = (0..n).flat_map(|i| g.weights_row(i).to_vec()).collect();
        WeightedGraph::from_dense(n, weights)
    }

    fn from_dense(n: usize, weights: Vec<f64>) -> Self {
        let degree: Vec<f64> = weights.chunks_exact(n.max(1)).map(|r| r.iter().sum()).collect();
        let total = degree.iter().sum();
        WeightedGraph {
            n,
            weights,
            degree,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn w(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn modularity(&self, assignment: &[usize]) -> Result<f64> {
        if self.n == 0 || self.total <= 0.0 {
            return Err(Error::invalid("modularity of a graph without edge weight"));
        }
        let k = assignment.iter().max().map_or(0, |&m| m + 1);
        let mut internal = vec![0.0; k];
        let mut strength = vec![0.0; k];
        for i in 0..self.n {
            let ci = assignment[i];
            strength[ci] += self.degree[i];
            for j in 0..self.n {
                if assignment[j] == ci {
                    internal[ci] += self.w(i, j);
                }
            }
        }
        let two_m = self.total;
        Ok(internal
            .iter()
            .zip(&strength)
            .map(|(&inside, &s)| inside / two_m - (s / two_m) * (s / two_m))
            .sum())
    }

    /// Collapses each community into one node; intra-community weight
    /// becomes the node's self-loop.
    pub fn aggregate(&self, assignment: &[usize]) -> WeightedGraph {
        let (dense, k) = relabel(assignment);
        let mut weights = vec![0.0; k * k];
        for i in 0..self.n {
            for j in 0..self.n {
                weights[dense[i] * k + dense[j]] += self.w(i, j);
            }
        }
        WeightedGraph::from_dense(k, weights)
    }
}

/// Modularity after every local-moving sweep of one aggregation level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrace {
    pub nodes: usize,
    pub moves: usize,
    pub sweep_modularity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub partition: Partition,
    /// Modularity of the starting singleton partition.
    pub initial_modularity: f64,
    pub levels: Vec<LevelTrace>,
}

impl Detection {
    /// Every recorded modularity value in order, starting from the singleton partition.
    pub fn modularity_trace(&self) -> Vec<f64> {
        std::iter::once(self.initial_modularity)
            .chain(self.levels.iter().flat_map(|l| l.sweep_modularity.iter().copied()))
            .collect()
    }
}

/// Pluggable community detection over a feature graph.
pub trait CommunityDetector {
    fn name(&self) -> &'static str;

    fn detect(&self, g: &FeatureGraph, seed: u64) -> Result<Detection>;
}

/// Two-phase greedy modularity optimization: local node moving followed by
/// community aggregation, repeated until a level makes no move.
#[derive(Debug, Clone, Copy, Default)]
pub struct Louvain;

impl CommunityDetector for Louvain {
    fn name(&self) -> &'static str {
        "louvain"
    }

    fn detect(&self, g: &FeatureGraph, seed: u64) -> Result<Detection> {
        if g.len() < 2 {
            return Err(Error::invalid("community detection needs at least two nodes"));
        }
        let base = WeightedGraph::from_feature_graph(g);
        let mut detection = self.run(&base, seed)?;
        let recomputed = modularity(g, detection.partition.assignment())?;
        detection.partition.modularity = Some(recomputed);
        Ok(detection)
    }
}

impl Louvain {
    /// Runs on an arbitrary weighted graph, e.g. one produced by [`WeightedGraph::aggregate`].
    pub fn run(&self, graph: &WeightedGraph, seed: u64) -> Result<Detection> {
        let mut rng = rng::stream(seed, Stream::Communities);
        let mut node_community: Vec<usize> = (0..graph.len()).collect();
        let initial_modularity = graph.modularity(&node_community)?;

        let mut levels = Vec::new();
        let mut level_graph = graph.clone();
        loop {
            let mut order: Vec<usize> = (0..level_graph.len()).collect();
            order.shuffle(&mut rng);
            let (assignment, trace) = local_moving(&level_graph, &order)?;
            let moved = trace.moves > 0;
            levels.push(trace);
            if !moved {
                break;
            }
            let (dense, _) = relabel(&assignment);
            for c in &mut node_community {
                *c = dense[*c];
            }
            level_graph = level_graph.aggregate(&dense);
        }

        Ok(Detection {
            partition: Partition::from_assignment(&node_community)?,
            initial_modularity,
            levels,
        })
    }
}

/// Repeated sweeps moving single nodes to the neighbouring community with
/// the largest strictly positive modularity gain, until a sweep moves nothing.
fn local_moving(g: &WeightedGraph, order: &[usize]) -> Result<(Vec<usize>, LevelTrace)> {
    let n = g.len();
    let two_m = g.total;
    let tolerance = 1e-12 * two_m.max(1.0);
    let mut community: Vec<usize> = (0..n).collect();
    let mut community_degree = g.degree.clone();
    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::with_capacity(n);
    let mut trace = LevelTrace {
        nodes: n,
        moves: 0,
        sweep_modularity: Vec::new(),
    };

    loop {
        let mut sweep_moves = 0;
        for &i in order {
            let current = community[i];
            let k_i = g.degree[i];
            touched.clear();
            for j in 0..n {
                let w = g.w(i, j);
                if j == i || w == 0.0 {
                    continue;
                }
                let c = community[j];
                if link[c] == 0.0 && !touched.contains(&c) {
                    touched.push(c);
                }
                link[c] += w;
            }

            community_degree[current] -= k_i;
            let gain = |c: usize, link: &[f64]| link[c] - k_i * community_degree[c] / two_m;
            let mut best = current;
            let mut best_gain = gain(current, &link);
            for &c in &touched {
                let candidate = gain(c, &link);
                if candidate > best_gain + tolerance {
                    best = c;
                    best_gain = candidate;
                }
            }
            community_degree[best] += k_i;
            if best != current {
                community[i] = best;
                sweep_moves += 1;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
        }
        trace.moves += sweep_moves;
        trace.sweep_modularity.push(g.modularity(&community)?);
        if sweep_moves == 0 {
            break;
        }
    }
    Ok((community, trace))
}

/// Louvain with the given seed.
pub fn detect_communities(g: &FeatureGraph, seed: u64) -> Result<Partition> {
    Ok(Louvain.detect(g, seed)?.partition)
}
