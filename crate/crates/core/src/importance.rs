//! Node importance: structural centralities blended with an LLM judgment.
//!
//! Every centrality is min-max normalized over the graph's nodes. A constant
//! score vector normalizes to 1.0 when positive and 0.0 otherwise.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::graph::{ImportanceScore, TheTree};

pub const PAGERANK_DAMPING: f64 = 0.85;
pub const PAGERANK_TOLERANCE: f64 = 1e-8;
pub const PAGERANK_MAX_ITER: usize = 200;
pub const EIGENVECTOR_TOLERANCE: f64 = 1e-8;
pub const EIGENVECTOR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CentralityError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("{0} did not converge within the iteration cap")]
    NonConvergence(&'static str),
    #[error("centrality weights must be non-negative and sum to 1")]
    InvalidWeights,
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CentralityKind {
    PageRank,
    CitationCount,
    Degree,
    Betweenness,
    Eigenvector,
}

impl CentralityKind {
    pub const ALL: [CentralityKind; 5] = [
        CentralityKind::PageRank,
        CentralityKind::CitationCount,
        CentralityKind::Degree,
        CentralityKind::Betweenness,
        CentralityKind::Eigenvector,
    ];
}

/// A directed citation graph with dense indices, built from ids.
#[derive(Debug, Clone, Default)]
pub struct CitationGraph {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl CitationGraph {
    /// Node ids are deduplicated and sorted; duplicate and self edges are
    /// dropped; edges naming unknown ids add those ids as nodes.
    pub fn new<I, S, E>(ids: I, edges: E) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let edges: Vec<(String, String)> = edges.into_iter().collect();
        let mut all: Vec<String> = ids.into_iter().map(Into::into).collect();
        all.extend(edges.iter().flat_map(|(s, t)| [s.clone(), t.clone()]));
        all.sort();
        all.dedup();
        let index: BTreeMap<String, usize> = all
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let n = all.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (s, t) in edges {
            let (s, t) = (index[&s], index[&t]);
            if s != t && !out[s].contains(&t) {
                out[s].push(t);
                inc[t].push(s);
            }
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
        }
        Self {
            ids: all,
            index,
            out,
            inc,
        }
    }

    /// Every edge of the tree, regardless of relation kind.
    pub fn from_tree(tree: &TheTree) -> Self {
        Self::new(
            tree.nodes().map(|n| n.id.clone()),
            tree.edges()
                .iter()
                .filter(|e| tree.contains(&e.source) && tree.contains(&e.target))
                .map(|e| (e.source.clone(), e.target.clone())),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn in_neighbors(&self, i: usize) -> &[usize] {
        &self.inc[i]
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }
}

/// Raw PageRank by power iteration; sums to 1. Dangling mass is spread
/// uniformly.
pub fn pagerank_raw(graph: &CitationGraph) -> Result<Vec<f64>, CentralityError> {
    let n = graph.len();
    if n == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    let nf = n as f64;
    let mut rank = vec![1.0 / nf; n];
    for _ in 0..PAGERANK_MAX_ITER {
        let dangling: f64 = (0..n)
            .filter(|&i| graph.out[i].is_empty())
            .map(|i| rank[i])
            .sum();
        let base = (1.0 - PAGERANK_DAMPING) / nf + PAGERANK_DAMPING * dangling / nf;
        let mut next = vec![base; n];
        for (i, targets) in graph.out.iter().enumerate() {
            if targets.is_empty() {
                continue;
            }
            let share = PAGERANK_DAMPING * rank[i] / targets.len() as f64;
            for &t in targets {
                next[t] += share;
            }
        }
        let delta: f64 = next.iter().zip(&rank).map(|(a, b)| (a - b).abs()).sum();
        rank = next;
        if delta < PAGERANK_TOLERANCE {
            return Ok(rank);
        }
    }
    Err(CentralityError::NonConvergence("pagerank"))
}

/// Brandes betweenness over unweighted directed shortest paths.
pub fn betweenness_raw(graph: &CitationGraph) -> Vec<f64> {
    let n = graph.len();
    let mut centrality = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &graph.out[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    centrality
}

/// Principal eigenvector of the undirected adjacency, via power iteration on
/// `A + I` (the shift keeps bipartite graphs from oscillating).
pub fn eigenvector_raw(graph: &CitationGraph) -> Result<Vec<f64>, CentralityError> {
    let n = graph.len();
    if n == 0 {
        return Err(CentralityError::EmptyGraph);
    }
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut all: Vec<usize> = graph.out[i].iter().chain(&graph.inc[i]).copied().collect();
            all.sort_unstable();
            all.dedup();
            all
        })
        .collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..EIGENVECTOR_MAX_ITER {
        let mut next: Vec<f64> = (0..n)
            .map(|i| x[i] + neighbors[i].iter().map(|&j| x[j]).sum::<f64>())
            .collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if delta < EIGENVECTOR_TOLERANCE {
            return Ok(x);
        }
    }
    Err(CentralityError::NonConvergence("eigenvector"))
}

fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span <= 1e-15 {
        let fill = if hi > 1e-15 { 1.0 } else { 0.0 };
        return vec![fill; values.len()];
    }
    values
        .iter()
        .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
        .collect()
}

/// Raw (unnormalized) centrality values, indexed like [`CitationGraph::ids`].
pub fn centrality_raw(
    graph: &CitationGraph,
    kind: CentralityKind,
) -> Result<Vec<f64>, CentralityError> {
    if graph.is_empty() {
        return Err(CentralityError::EmptyGraph);
    }
    Ok(match kind {
        CentralityKind::PageRank => pagerank_raw(graph)?,
        CentralityKind::CitationCount => graph.inc.iter().map(|v| v.len() as f64).collect(),
        CentralityKind::Degree => (0..graph.len())
            .map(|i| (graph.out[i].len() + graph.inc[i].len()) as f64)
            .collect(),
        CentralityKind::Betweenness => betweenness_raw(graph),
        CentralityKind::Eigenvector => eigenvector_raw(graph)?,
    })
}

/// Normalized centrality per node id.
pub fn centrality(
    graph: &CitationGraph,
    kind: CentralityKind,
) -> Result<BTreeMap<String, f64>, CentralityError> {
    let normalized = min_max(&centrality_raw(graph, kind)?);
    Ok(graph.ids.iter().cloned().zip(normalized).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralityWeights {
    pub pagerank: f64,
    pub citation: f64,
    pub degree: f64,
    pub betweenness: f64,
    pub eigenvector: f64,
}

impl CentralityWeights {
    pub const UNIFORM: CentralityWeights = CentralityWeights {
        pagerank: 0.2,
        citation: 0.2,
        degree: 0.2,
        betweenness: 0.2,
        eigenvector: 0.2,
    };

    pub fn get(&self, kind: CentralityKind) -> f64 {
        match kind {
            CentralityKind::PageRank => self.pagerank,
            CentralityKind::CitationCount => self.citation,
            CentralityKind::Degree => self.degree,
            CentralityKind::Betweenness => self.betweenness,
            CentralityKind::Eigenvector => self.eigenvector,
        }
    }

    fn from_array(w: [f64; 5]) -> Self {
        Self {
            pagerank: w[0],
            citation: w[1],
            degree: w[2],
            betweenness: w[3],
            eigenvector: w[4],
        }
    }

    pub fn validate(&self) -> Result<(), CentralityError> {
        let all = CentralityKind::ALL.map(|k| self.get(k));
        let sum: f64 = all.iter().sum();
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(CentralityError::InvalidWeights);
        }
        Ok(())
    }
}

/// All five normalized centralities, computed once.
#[derive(Debug, Clone)]
pub struct CentralityTable {
    ids: Vec<String>,
    // columns follow CentralityKind::ALL
    scores: Vec<[f64; 5]>,
}

impl CentralityTable {
    pub fn compute(graph: &CitationGraph) -> Result<Self, CentralityError> {
        let columns = CentralityKind::ALL
            .iter()
            .map(|&k| centrality_raw(graph, k).map(|raw| min_max(&raw)))
            .collect::<Result<Vec<_>, _>>()?;
        let scores = (0..graph.len())
            .map(|i| std::array::from_fn(|k| columns[k][i]))
            .collect();
        Ok(Self {
            ids: graph.ids.clone(),
            scores,
        })
    }

    pub fn scores_of(&self, id: &str) -> Option<[f64; 5]> {
        self.ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|i| self.scores[i])
    }

    /// Weights proportional to each measure's variance across nodes.
    pub fn dynamic_weights(&self) -> CentralityWeights {
        let n = self.scores.len() as f64;
        let variances: [f64; 5] = std::array::from_fn(|k| {
            let mean = self.scores.iter().map(|s| s[k]).sum::<f64>() / n;
            self.scores
                .iter()
                .map(|s| (s[k] - mean).powi(2))
                .sum::<f64>()
                / n
        });
        let total: f64 = variances.iter().sum();
        if total <= 1e-15 {
            return CentralityWeights::UNIFORM;
        }
        CentralityWeights::from_array(variances.map(|v| v / total))
    }

    pub fn graph_score(
        &self,
        id: &str,
        weights: &CentralityWeights,
    ) -> Result<f64, CentralityError> {
        weights.validate()?;
        let scores = self
            .scores_of(id)
            .ok_or_else(|| CentralityError::UnknownNode(id.to_string()))?;
        Ok(weighted_sum(&scores, weights))
    }
}

/// Σ_k weight_k · score_k, clamped into [0, 1] against rounding.
pub fn weighted_sum(scores: &[f64; 5], weights: &CentralityWeights) -> f64 {
    CentralityKind::ALL
        .iter()
        .zip(scores)
        .map(|(&k, s)| weights.get(k) * s)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

pub fn graph_score(
    graph: &CitationGraph,
    id: &str,
    weights: &CentralityWeights,
) -> Result<f64, CentralityError> {
    CentralityTable::compute(graph)?.graph_score(id, weights)
}

pub fn dynamic_weights(graph: &CitationGraph) -> Result<CentralityWeights, CentralityError> {
    if graph.len() == 1 {
        return Ok(CentralityWeights::UNIFORM);
    }
    Ok(CentralityTable::compute(graph)?.dynamic_weights())
}

/// S(v) = γ·S_graph + (1−γ)·S_LLM.
pub fn combined_importance(
    graph_score: f64,
    llm_score: f64,
    gamma: f64,
) -> Result<ImportanceScore, CentralityError> {
    for (name, value) in [
        ("graph_score", graph_score),
        ("llm_score", llm_score),
        ("gamma", gamma),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(CentralityError::OutOfRange { name, value });
        }
    }
    Ok(ImportanceScore {
        graph_score,
        llm_score,
        gamma,
        combined: gamma * graph_score + (1.0 - gamma) * llm_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(ids: &[&str], edges: &[(&str, &str)]) -> CitationGraph {
        CitationGraph::new(
            ids.iter().copied(),
            edges.iter().map(|(s, t)| (s.to_string(), t.to_string())),
        )
    }

    #[test]
    fn pagerank_symmetric_pair() {
        let g = graph(&["a", "b"], &[("a", "b"), ("b", "a")]);
        let raw = pagerank_raw(&g).unwrap();
        assert!((raw[0] - 0.5).abs() < 1e-9 && (raw[1] - 0.5).abs() < 1e-9);
        let norm = centrality(&g, CentralityKind::PageRank).unwrap();
        assert_eq!(norm["a"], norm["b"]);
    }

    #[test]
    fn betweenness_chain_middle_is_max() {
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let raw = betweenness_raw(&g);
        // Only the pair (a, c) routes through b.
        assert_eq!(raw, vec![0.0, 1.0, 0.0]);
        let norm = centrality(&g, CentralityKind::Betweenness).unwrap();
        assert_eq!(norm["b"], 1.0);
        assert!(norm["b"] > norm["a"] && norm["b"] > norm["c"]);
    }

    #[test]
    fn citation_count_star() {
        let g = graph(
            &["c", "l1", "l2", "l3", "l4"],
            &[("l1", "c"), ("l2", "c"), ("l3", "c"), ("l4", "c")],
        );
        let norm = centrality(&g, CentralityKind::CitationCount).unwrap();
        assert_eq!(norm["c"], 1.0);
        for leaf in ["l1", "l2", "l3", "l4"] {
            assert_eq!(norm[leaf], 0.0);
        }
    }

    #[test]
    fn empty_graph_errors() {
        let g = CitationGraph::default();
        assert_eq!(
            centrality(&g, CentralityKind::Degree),
            Err(CentralityError::EmptyGraph)
        );
        assert_eq!(
            dynamic_weights(&g).unwrap_err(),
            CentralityError::EmptyGraph
        );
    }

    #[test]
    fn graph_score_boundary_weights() {
        let g = graph(&["hub", "a", "b"], &[("a", "hub"), ("b", "hub")]);
        let degree_only = CentralityWeights {
            pagerank: 0.0,
            citation: 0.0,
            degree: 1.0,
            betweenness: 0.0,
            eigenvector: 0.0,
        };
        assert_eq!(graph_score(&g, "hub", &degree_only).unwrap(), 1.0);
    }

    #[test]
    fn weighted_sum_examples() {
        let all_one = [1.0; 5];
        assert!((weighted_sum(&all_one, &CentralityWeights::UNIFORM) - 1.0).abs() < 1e-12);
        let mixed = [0.5, 0.0, 1.0, 0.0, 0.0];
        assert!((weighted_sum(&mixed, &CentralityWeights::UNIFORM) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn invalid_weights_rejected() {
        let g = graph(&["a"], &[]);
        let bad = CentralityWeights {
            pagerank: 0.5,
            ..CentralityWeights::UNIFORM
        };
        assert_eq!(
            graph_score(&g, "a", &bad),
            Err(CentralityError::InvalidWeights)
        );
    }

    #[test]
    fn dynamic_weights_single_node_uniform() {
        let g = graph(&["only"], &[]);
        assert_eq!(dynamic_weights(&g).unwrap(), CentralityWeights::UNIFORM);
    }

    #[test]
    fn dynamic_weights_drop_tied_measure() {
        // Fan-out from a: no node lies on a path between two others.
        let g = graph(&["a", "b", "c"], &[("a", "b"), ("a", "c")]);
        let table = CentralityTable::compute(&g).unwrap();
        let betweenness: Vec<f64> = ["a", "b", "c"]
            .iter()
            .map(|id| table.scores_of(id).unwrap()[3])
            .collect();
        assert!(betweenness.iter().all(|v| *v == betweenness[0]));
        let w = dynamic_weights(&g).unwrap();
        assert!(w.betweenness < 0.2);
        w.validate().unwrap();
    }

    #[test]
    fn dynamic_weights_disconnected_sum_to_one() {
        let g = graph(&["a", "b", "c", "d"], &[("a", "b"), ("c", "d")]);
        dynamic_weights(&g).unwrap().validate().unwrap();
    }

    #[test]
    fn combined_importance_examples() {
        assert_eq!(combined_importance(0.8, 0.4, 1.0).unwrap().combined, 0.8);
        // 0.4 + 0.2 rounds to 0.6000000000000001 in binary floating point.
        assert!((combined_importance(0.8, 0.4, 0.5).unwrap().combined - 0.6).abs() <= 1e-12);
        assert_eq!(combined_importance(0.1, 0.37, 0.0).unwrap().combined, 0.37);
        assert!(matches!(
            combined_importance(1.2, 0.4, 0.5),
            Err(CentralityError::OutOfRange {
                name: "graph_score",
                ..
            })
        ));
    }

    #[test]
    fn eigenvector_star_center_highest() {
        let g = graph(&["c", "x", "y", "z"], &[("x", "c"), ("y", "c"), ("z", "c")]);
        let norm = centrality(&g, CentralityKind::Eigenvector).unwrap();
        assert_eq!(norm["c"], 1.0);
        assert_eq!(norm["x"], 0.0);
    }
}
