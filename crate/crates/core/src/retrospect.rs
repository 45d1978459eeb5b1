//! Historical path retrospection: given a new paper, find the relevant
//! trees, pick recent similar nodes as terminals and trace each one back
//! through its closest, most important predecessors.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::{dot_escape, PaperNode, TheTree};
use crate::oracle::{Oracle, OracleError};

#[derive(Debug, Error)]
pub enum RetroError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no topics to choose from")]
    EmptyTopics,
    #[error("tree has no nodes")]
    EmptyTree,
    #[error("no node reaches the similarity threshold {0}")]
    NoTerminals(f64),
    #[error("node {0} is not in the tree")]
    UnknownNode(String),
    #[error("paper {0} has no importance score")]
    MissingImportance(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetroQuery {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub n_topics: usize,
    pub m_recent: usize,
    pub n_terminals: usize,
    pub theta_sim: f64,
    pub max_path_len: usize,
    pub n_paths: usize,
    /// Only nodes up to this year may be terminals.
    pub year_cap: Option<i32>,
}

impl Default for RetroQuery {
    fn default() -> Self {
        Self {
            title: String::new(),
            abstract_text: String::new(),
            n_topics: 2,
            m_recent: 50,
            n_terminals: 5,
            theta_sim: 0.5,
            max_path_len: 15,
            n_paths: 5,
            year_cap: None,
        }
    }
}

impl RetroQuery {
    pub fn new(title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            abstract_text: abstract_text.into(),
            ..Self::default()
        }
    }

    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }

    pub fn validate(&self) -> Result<(), RetroError> {
        if self.text().trim().is_empty() {
            return Err(RetroError::InvalidQuery(
                "title and abstract are empty".into(),
            ));
        }
        let counts = [
            self.n_topics,
            self.m_recent,
            self.n_terminals,
            self.max_path_len,
            self.n_paths,
        ];
        if counts.contains(&0) {
            return Err(RetroError::InvalidQuery(
                "all counts must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta_sim) {
            return Err(RetroError::InvalidQuery(
                "theta_sim must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetroPath {
    pub topic: String,
    /// Oldest first; the last node is the terminal.
    pub nodes: Vec<PaperNode>,
    pub terminal_similarity: f64,
    pub rank_score: f64,
}

impl RetroPath {
    pub fn terminal(&self) -> Option<&PaperNode> {
        self.nodes.last()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }

    /// Σ S(v) over the path, unscored nodes counting zero.
    pub fn cumulative_importance(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(PaperNode::importance_value)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    #[default]
    TerminalSimilarity,
    CumulativeImportance,
}

/// The `n_topics` topics most similar to the query, ties alphabetical.
pub fn identify_topics(
    query: &RetroQuery,
    topics: &[String],
    oracle: &dyn Oracle,
) -> Result<Vec<String>, RetroError> {
    if topics.is_empty() {
        return Err(RetroError::EmptyTopics);
    }
    let text = query.text();
    let mut scored = topics
        .iter()
        .map(|t| Ok((oracle.similarity(&text, t)?, t.clone())))
        .collect::<Result<Vec<_>, OracleError>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored
        .into_iter()
        .take(query.n_topics)
        .map(|(_, t)| t)
        .collect())
}

/// Among the `m_recent` newest nodes (ties by id), those at least
/// `theta_sim` similar to the query, best `n_terminals` first.
pub fn candidate_terminals(
    tree: &TheTree,
    query: &RetroQuery,
    oracle: &dyn Oracle,
) -> Result<Vec<(PaperNode, f64)>, RetroError> {
    if tree.is_empty() {
        return Err(RetroError::EmptyTree);
    }
    let mut recent: Vec<&PaperNode> = tree
        .nodes()
        .filter(|n| query.year_cap.is_none_or(|cap| n.year <= cap))
        .collect();
    recent.sort_by(|a, b| b.year.cmp(&a.year).then(a.id.cmp(&b.id)));
    recent.truncate(query.m_recent);
    let text = query.text();
    let mut kept = Vec::new();
    for node in recent {
        let s = oracle.similarity(&text, &node.summary_text())?;
        if s >= query.theta_sim {
            kept.push((node.clone(), s));
        }
    }
    if kept.is_empty() {
        return Err(RetroError::NoTerminals(query.theta_sim));
    }
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
    kept.truncate(query.n_terminals);
    Ok(kept)
}

/// Lexicographic order on (year gap, −S, id): smaller is better.
fn predecessor_order(current_year: i32, a: &PaperNode, b: &PaperNode) -> Ordering {
    let gap = |p: &PaperNode| current_year - p.year;
    let s = |p: &PaperNode| p.importance_value().unwrap_or(f64::NEG_INFINITY);
    gap(a)
        .cmp(&gap(b))
        .then(s(b).total_cmp(&s(a)))
        .then(a.id.cmp(&b.id))
}

/// The predecessor no later than `current` with the smallest year gap,
/// then the highest importance, then the smallest id.
pub fn select_predecessor<'t>(
    tree: &'t TheTree,
    current: &str,
) -> Result<Option<&'t PaperNode>, RetroError> {
    let node = tree
        .node(current)
        .ok_or_else(|| RetroError::UnknownNode(current.to_string()))?;
    let preds: Vec<&PaperNode> = tree
        .predecessors(current)
        .into_iter()
        .filter(|p| p.year <= node.year)
        .collect();
    if let Some(p) = preds.iter().find(|p| p.importance.is_none()) {
        return Err(RetroError::MissingImportance(p.id.clone()));
    }
    Ok(preds
        .into_iter()
        .min_by(|a, b| predecessor_order(node.year, a, b)))
}

/// Walks backward from the terminal for at most `max_len` nodes and returns
/// the path oldest first.
pub fn trace_path(tree: &TheTree, terminal: &str, max_len: usize) -> Result<RetroPath, RetroError> {
    let start = tree
        .node(terminal)
        .ok_or_else(|| RetroError::UnknownNode(terminal.to_string()))?;
    let mut nodes = vec![start.clone()];
    let mut seen: BTreeSet<String> = [start.id.clone()].into();
    while nodes.len() < max_len {
        let cur = &nodes.last().expect("non-empty").id;
        match select_predecessor(tree, cur)? {
            Some(p) if seen.insert(p.id.clone()) => nodes.push(p.clone()),
            _ => break,
        }
    }
    nodes.reverse();
    Ok(RetroPath {
        topic: tree.topic.clone(),
        nodes,
        terminal_similarity: 0.0,
        rank_score: 0.0,
    })
}

/// Drops repeated node sequences, ranks, and keeps the best `n_paths`.
pub fn aggregate_paths(paths: Vec<RetroPath>, n_paths: usize, ranking: Ranking) -> Vec<RetroPath> {
    let mut scored: Vec<RetroPath> = paths
        .into_iter()
        .map(|mut p| {
            p.rank_score = match ranking {
                Ranking::TerminalSimilarity => p.terminal_similarity,
                Ranking::CumulativeImportance => p.cumulative_importance(),
            };
            p
        })
        .collect();
    let terminal_id = |p: &RetroPath| p.terminal().map(|n| n.id.clone()).unwrap_or_default();
    scored.sort_by(|a, b| {
        b.rank_score
            .total_cmp(&a.rank_score)
            .then(terminal_id(a).cmp(&terminal_id(b)))
    });
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    scored.retain(|p| seen.insert(p.nodes.iter().map(|n| n.id.clone()).collect()));
    scored.truncate(n_paths);
    scored
}

/// Full retrospection over a set of trees, one per topic.
pub fn retrospect(
    query: &RetroQuery,
    trees: &[TheTree],
    ranking: Ranking,
    oracle: &dyn Oracle,
) -> Result<Vec<RetroPath>, RetroError> {
    query.validate()?;
    let topics: Vec<String> = trees.iter().map(|t| t.topic.clone()).collect();
    let chosen = identify_topics(query, &topics, oracle)?;
    let mut paths = Vec::new();
    for topic in &chosen {
        for tree in trees.iter().filter(|t| &t.topic == topic) {
            let terminals = match candidate_terminals(tree, query, oracle) {
                Ok(t) => t,
                Err(RetroError::NoTerminals(_) | RetroError::EmptyTree) => continue,
                Err(e) => return Err(e),
            };
            for (terminal, similarity) in terminals {
                let mut path = trace_path(tree, &terminal.id, query.max_path_len)?;
                path.terminal_similarity = similarity;
                paths.push(path);
            }
        }
    }
    if paths.is_empty() {
        return Err(RetroError::NoTerminals(query.theta_sim));
    }
    Ok(aggregate_paths(paths, query.n_paths, ranking))
}

/// `{paths: [{topic, terminal_similarity, nodes: [{id, title, year, summary}]}]}`
pub fn paths_to_json(paths: &[RetroPath]) -> Value {
    let paths: Vec<Value> = paths
        .iter()
        .map(|p| {
            json!({
                "topic": p.topic,
                "terminal_similarity": p.terminal_similarity,
                "nodes": p.nodes.iter().map(|n| json!({
                    "id": n.id,
                    "title": n.title,
                    "year": n.year,
                    "summary": n.summary_text(),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "paths": paths })
}

/// One DOT cluster per path.
pub fn paths_to_dot(paths: &[RetroPath]) -> String {
    let mut out = String::from("digraph retrospection {\n  rankdir=LR;\n");
    for (i, p) in paths.iter().enumerate() {
        out.push_str(&format!(
            "  subgraph cluster_{i} {{\n    label=\"{} ({:.2})\";\n",
            dot_escape(&p.topic),
            p.terminal_similarity
        ));
        for n in &p.nodes {
            out.push_str(&format!(
                "    \"{i}:{}\" [label=\"{}\\n{}\"];\n",
                dot_escape(&n.id),
                dot_escape(&n.title),
                n.year
            ));
        }
        for w in p.nodes.windows(2) {
            out.push_str(&format!(
                "    \"{i}:{}\" -> \"{i}:{}\";\n",
                dot_escape(&w[0].id),
                dot_escape(&w[1].id)
            ));
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EvolutionEdge, ImportanceScore, RelationKind};
    use crate::oracle::{Fixtures, MockOracle, PairFixture};

    fn scored(id: &str, year: i32, s: f64) -> PaperNode {
        PaperNode::new(id, format!("paper {id}"), year).with_importance(ImportanceScore {
            graph_score: s,
            llm_score: s,
            gamma: 0.5,
            combined: s,
        })
    }

    fn tree(nodes: &[PaperNode], edges: &[(&str, &str)]) -> TheTree {
        let mut t = TheTree::new("topic");
        for n in nodes {
            t.add_node(n.clone()).unwrap();
        }
        for (s, d) in edges {
            t.add_edge(EvolutionEdge::new(*s, *d, RelationKind::EvolvesInto).with_attribution(0.9))
                .unwrap();
        }
        t
    }

    fn sim_fixtures(query: &str, scores: &[(&str, f64)]) -> MockOracle {
        let mut f = Fixtures::default();
        for (b, score) in scores {
            f.similarity.push(PairFixture {
                a: query.into(),
                b: (*b).into(),
                score: *score,
            });
        }
        MockOracle::with_fixtures(0, f)
    }

    #[test]
    fn topics_ranked_and_capped() {
        let q = RetroQuery::new("q", "");
        let oracle = sim_fixtures("q", &[("alpha", 0.9), ("beta", 0.2), ("gamma", 0.7)]);
        let topics: Vec<String> = ["alpha", "beta", "gamma"].map(String::from).to_vec();
        assert_eq!(
            identify_topics(&q, &topics, &oracle).unwrap(),
            vec!["alpha", "gamma"]
        );
        let all = RetroQuery {
            n_topics: 9,
            ..q.clone()
        };
        assert_eq!(identify_topics(&all, &topics, &oracle).unwrap().len(), 3);
        let tie = sim_fixtures("q", &[("zeta", 0.5), ("eta", 0.5)]);
        let t2: Vec<String> = ["zeta", "eta"].map(String::from).to_vec();
        assert_eq!(identify_topics(&q, &t2, &tie).unwrap(), vec!["eta", "zeta"]);
        assert!(matches!(
            identify_topics(&q, &[], &tie),
            Err(RetroError::EmptyTopics)
        ));
    }

    #[test]
    fn terminals_filtered_and_ranked() {
        let nodes = [
            scored("a", 2010, 0.1),
            scored("b", 2015, 0.1),
            scored("c", 2020, 0.1),
        ];
        let t = tree(&nodes, &[]);
        let oracle = sim_fixtures("q", &[("paper a", 0.9), ("paper b", 0.6), ("paper c", 0.3)]);
        let q = RetroQuery::new("q", "");
        let got = candidate_terminals(&t, &q, &oracle).unwrap();
        assert_eq!(
            got.iter().map(|(n, _)| n.id.as_str()).collect::<Vec<_>>(),
            vec!["a", "b"]
        );
        let recent = RetroQuery {
            m_recent: 2,
            theta_sim: 0.0,
            ..q.clone()
        };
        let got = candidate_terminals(&t, &recent, &oracle).unwrap();
        assert_eq!(
            got.iter().map(|(n, _)| n.id.as_str()).collect::<Vec<_>>(),
            vec!["b", "c"]
        );
        let strict = RetroQuery {
            theta_sim: 1.0,
            ..q
        };
        assert!(matches!(
            candidate_terminals(&t, &strict, &oracle),
            Err(RetroError::NoTerminals(_))
        ));
    }

    #[test]
    fn predecessor_examples() {
        let nodes = [
            scored("p1", 2019, 0.4),
            scored("p2", 2019, 0.9),
            scored("p3", 2015, 1.0),
            scored("cur", 2020, 0.5),
        ];
        let t = tree(&nodes, &[("p1", "cur"), ("p2", "cur"), ("p3", "cur")]);
        assert_eq!(select_predecessor(&t, "cur").unwrap().unwrap().id, "p2");
        assert!(select_predecessor(&t, "p1").unwrap().is_none());

        let tie = [
            scored("y", 2019, 0.5),
            scored("x", 2019, 0.5),
            scored("cur", 2020, 0.5),
        ];
        let t = tree(&tie, &[("y", "cur"), ("x", "cur")]);
        assert_eq!(select_predecessor(&t, "cur").unwrap().unwrap().id, "x");

        let mut bare = TheTree::new("t");
        bare.add_node(PaperNode::new("u", "u", 2000)).unwrap();
        bare.add_node(scored("v", 2001, 0.3)).unwrap();
        bare.add_edge(
            EvolutionEdge::new("u", "v", RelationKind::EvolvesInto).with_attribution(0.9),
        )
        .unwrap();
        assert!(matches!(
            select_predecessor(&bare, "v"),
            Err(RetroError::MissingImportance(_))
        ));
    }

    #[test]
    fn tracing() {
        let chain: Vec<PaperNode> = (0..5)
            .map(|i| scored(&format!("n{i}"), 2010 + i, 0.5))
            .collect();
        let t = tree(
            &chain,
            &[("n0", "n1"), ("n1", "n2"), ("n2", "n3"), ("n3", "n4")],
        );
        assert_eq!(
            trace_path(&t, "n2", 15).unwrap().ids(),
            vec!["n0", "n1", "n2"]
        );
        assert_eq!(trace_path(&t, "n0", 15).unwrap().ids(), vec!["n0"]);
        assert_eq!(trace_path(&t, "n4", 2).unwrap().ids(), vec!["n3", "n4"]);
    }

    #[test]
    fn aggregation() {
        let path = |ids: &[(&str, f64)], sim: f64| RetroPath {
            topic: "t".into(),
            nodes: ids
                .iter()
                .enumerate()
                .map(|(i, (id, s))| scored(id, 2000 + i as i32, *s))
                .collect(),
            terminal_similarity: sim,
            rank_score: 0.0,
        };
        let a = path(&[("a", 0.5), ("b", 1.2)], 0.6);
        let b = path(&[("c", 1.0), ("d", 0.2)], 0.8);
        let out = aggregate_paths(
            vec![a.clone(), b.clone(), a.clone()],
            5,
            Ranking::TerminalSimilarity,
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].terminal().unwrap().id, "d");
        let out = aggregate_paths(vec![a, b], 5, Ranking::CumulativeImportance);
        assert_eq!(out[0].terminal().unwrap().id, "b");
        assert!((out[0].rank_score - 1.7).abs() < 1e-12);
        assert_eq!(
            aggregate_paths(out, 1, Ranking::CumulativeImportance).len(),
            1
        );
    }

    #[test]
    fn end_to_end_json() {
        let chain: Vec<PaperNode> = (0..3)
            .map(|i| scored(&format!("n{i}"), 2010 + i, 0.5))
            .collect();
        let t = tree(&chain, &[("n0", "n1"), ("n1", "n2")]);
        let q = RetroQuery {
            theta_sim: 0.0,
            ..RetroQuery::new("paper n2", "")
        };
        let paths = retrospect(&q, &[t], Ranking::TerminalSimilarity, &MockOracle::new(0)).unwrap();
        assert_eq!(paths[0].ids(), vec!["n0", "n1", "n2"]);
        let v = paths_to_json(&paths);
        assert_eq!(v["paths"][0]["nodes"][2]["id"], "n2");
        assert!(paths_to_dot(&paths).contains("\"0:n1\" -> \"0:n2\""));
    }
}
