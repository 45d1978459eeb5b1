//! Browser bindings. Each export is a thin wrapper over a plain function
//! taking and returning JSON text, so the logic runs natively in tests.

use std::collections::BTreeMap;

use evotree::corpus::{Citation, Corpus};
use evotree::graph::PaperNode;
use evotree::importance::{combined_importance, CentralityTable, CentralityWeights, CitationGraph};
use evotree::oracle::MockOracle;
use evotree::search::{self, exploration_term, sgt_uct_value, temp_coherence, SearchConfig};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveRequest {
    pub q: f64,
    pub visits: u64,
    pub parent_visits: u64,
    pub c: f64,
    pub lambda: f64,
    pub priority: f64,
    pub tau: f64,
    /// Year gaps from −2 up to this value are sampled.
    pub max_gap: i32,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CurvePoint {
    pub gap: i32,
    pub coherence: f64,
    pub uct: f64,
}

/// Coherence and SGT-UCT value as the candidate's year gap grows.
pub fn uct_curve(request: &str) -> Result<String, String> {
    let r: CurveRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if r.visits == 0 || r.parent_visits < r.visits {
        return Err("need 0 < visits <= parent_visits".into());
    }
    let points: Vec<CurvePoint> = (-2..=r.max_gap.clamp(0, 200))
        .map(|gap| {
            let coherence = temp_coherence(2000 + gap, 2000, r.tau);
            CurvePoint {
                gap,
                coherence,
                uct: sgt_uct_value(
                    r.q,
                    r.visits,
                    r.parent_visits,
                    r.c,
                    r.lambda,
                    r.priority,
                    coherence,
                ),
            }
        })
        .collect();
    let exploration = exploration_term(r.visits, r.parent_visits, r.c);
    serde_json::to_string(&serde_json::json!({"exploration": exploration, "points": points}))
        .map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRequest {
    pub edges: Vec<(String, String)>,
    pub gamma: f64,
    /// LLM judgment per node; missing nodes get 0.5.
    #[serde(default)]
    pub llm: BTreeMap<String, f64>,
}

/// Importance of every node of a small citation graph.
pub fn score_graph(request: &str) -> Result<String, String> {
    let r: GraphRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let graph = CitationGraph::new(Vec::<String>::new(), r.edges);
    let table = CentralityTable::compute(&graph).map_err(|e| e.to_string())?;
    let weights = if graph.len() == 1 {
        CentralityWeights::UNIFORM
    } else {
        table.dynamic_weights()
    };
    let mut nodes = Vec::new();
    for id in graph.ids() {
        let g = table.graph_score(id, &weights).map_err(|e| e.to_string())?;
        let llm = r.llm.get(id).copied().unwrap_or(0.5);
        let s = combined_importance(g, llm, r.gamma).map_err(|e| e.to_string())?;
        nodes.push(serde_json::json!({
            "id": id,
            "centralities": table.scores_of(id),
            "graph": s.graph_score,
            "llm": s.llm_score,
            "combined": s.combined,
        }));
    }
    let w = [
        weights.pagerank,
        weights.citation,
        weights.degree,
        weights.betweenness,
        weights.eigenvector,
    ];
    serde_json::to_string(&serde_json::json!({"weights": w, "nodes": nodes}))
        .map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub topic: String,
    pub papers: Vec<PaperNode>,
    #[serde(default)]
    pub citations: Vec<(String, String)>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

fn default_iterations() -> usize {
    200
}

/// Runs the tree search with the deterministic mock oracle.
pub fn toy_search(request: &str) -> Result<String, String> {
    let r: SearchRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let mut corpus = Corpus::from_papers(r.papers);
    corpus.citations = r
        .citations
        .into_iter()
        .map(|(source, target)| Citation { source, target })
        .collect();
    let config = SearchConfig {
        seed: r.seed,
        max_iterations: r.iterations.min(5000),
        ..SearchConfig::default()
    };
    let oracle = MockOracle::new(r.seed);
    let out =
        search::run_detailed(&corpus, &r.topic, &config, &oracle).map_err(|e| e.to_string())?;
    let tree: serde_json::Value =
        serde_json::from_str(&out.tree.to_json()).map_err(|e| e.to_string())?;
    serde_json::to_string(&serde_json::json!({
        "tree": tree,
        "best_path": out.best_path,
        "best_reward": out.best_reward.total,
        "iterations": out.iterations,
    }))
    .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = uctCurve)]
pub fn uct_curve_js(request: &str) -> Result<String, JsError> {
    uct_curve(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scoreGraph)]
pub fn score_graph_js(request: &str) -> Result<String, JsError> {
    score_graph(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = toySearch)]
pub fn toy_search_js(request: &str) -> Result<String, JsError> {
    toy_search(request).map_err(|e| JsError::new(&e))
}
