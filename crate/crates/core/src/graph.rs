//! Temporal DAG model for technology-evolution trees.
//!
//! A [`TheTree`] holds [`PaperNode`]s keyed by id and a list of
//! [`EvolutionEdge`]s. Mutation goes through [`TheTree::add_node`] and
//! [`TheTree::add_edge`], which enforce every structural invariant. Trees read
//! from disk are accepted as-is (schema permitting) and can be triaged with
//! [`TheTree::validate`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Lowest publication year accepted for a node.
pub const YEAR_FLOOR: i32 = 1900;
/// Default upper bound for publication years.
pub const DEFAULT_HORIZON: i32 = 2100;

const GAMMA_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScore {
    #[serde(rename = "graph")]
    pub graph_score: f64,
    #[serde(rename = "llm")]
    pub llm_score: f64,
    pub gamma: f64,
    pub combined: f64,
}

impl ImportanceScore {
    /// True when `combined` is the gamma blend of the two components.
    pub fn is_consistent(&self) -> bool {
        let expected = self.gamma * self.graph_score + (1.0 - self.gamma) * self.llm_score;
        (expected - self.combined).abs() <= GAMMA_TOLERANCE
    }
}

/// One scientific paper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperNode {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
    pub venue: Option<String>,
    pub year: i32,
    pub importance: Option<ImportanceScore>,
}

impl PaperNode {
    pub fn new(id: impl Into<String>, title: impl Into<String>, year: i32) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            abstract_text: String::new(),
            authors: Vec::new(),
            venue: None,
            year,
            importance: None,
        }
    }

    pub fn with_abstract(mut self, text: impl Into<String>) -> Self {
        self.abstract_text = text.into();
        self
    }

    pub fn with_importance(mut self, score: ImportanceScore) -> Self {
        self.importance = Some(score);
        self
    }

    /// Title followed by abstract, used wherever a node is compared as text.
    pub fn summary_text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }

    /// Combined importance S(v), if scored.
    pub fn importance_value(&self) -> Option<f64> {
        self.importance.as_ref().map(|s| s.combined)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    EvolvesInto,
    Enables,
    CitesPlain,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [
        RelationKind::EvolvesInto,
        RelationKind::Enables,
        RelationKind::CitesPlain,
    ];

    /// Reasoning edges take part in the acyclicity invariant and need an
    /// attribution score.
    pub fn is_reasoning(self) -> bool {
        !matches!(self, RelationKind::CitesPlain)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::EvolvesInto => "evolves_into",
            RelationKind::Enables => "enables",
            RelationKind::CitesPlain => "cites_plain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NliLabel {
    Entailment,
    Contradiction,
    Neutral,
}

impl NliLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            NliLabel::Entailment => "entailment",
            NliLabel::Contradiction => "contradiction",
            NliLabel::Neutral => "neutral",
        }
    }
}

/// A passage backing an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub document_id: String,
    pub passage: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionEdge {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    pub nli: Option<NliLabel>,
    pub attribution: Option<f64>,
    pub evidence: Vec<Evidence>,
}

impl EvolutionEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, kind: RelationKind) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            kind,
            nli: None,
            attribution: None,
            evidence: Vec::new(),
        }
    }

    pub fn with_attribution(mut self, score: f64) -> Self {
        self.attribution = Some(score);
        self
    }

    pub fn citation(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self::new(source, target, RelationKind::CitesPlain)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("node id `{0}` already present")]
    DuplicateId(String),
    #[error("node `{id}` has year {year} outside [{floor}, {horizon}]")]
    InvalidYear {
        id: String,
        year: i32,
        floor: i32,
        horizon: i32,
    },
    #[error("node `{0}` has an empty title")]
    EmptyTitle(String),
    #[error("edge endpoint `{0}` is not in the tree")]
    UnknownEndpoint(String),
    #[error("edge {source_id} ({source_year}) -> {target_id} ({target_year}) goes back in time")]
    AchronologicalEdge {
        source_id: String,
        source_year: i32,
        target_id: String,
        target_year: i32,
    },
    #[error("edge {0} -> {1} would introduce a cycle")]
    CycleIntroduced(String, String),
    #[error("edge {0} -> {1} needs an attribution score in [0, 1]")]
    MissingAttribution(String, String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
}

/// One broken invariant found by [`TheTree::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidYear { node: String, year: i32 },
    EmptyTitle { node: String },
    InconsistentImportance { node: String },
    UnknownEndpoint { edge: usize, endpoint: String },
    AchronologicalEdge { edge: usize },
    MissingAttribution { edge: usize },
    Cycle { nodes: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidYear { node, year } => write!(f, "node {node}: invalid year {year}"),
            Violation::EmptyTitle { node } => write!(f, "node {node}: empty title"),
            Violation::InconsistentImportance { node } => {
                write!(
                    f,
                    "node {node}: combined importance does not match its components"
                )
            }
            Violation::UnknownEndpoint { edge, endpoint } => {
                write!(f, "edge {edge}: unknown endpoint {endpoint}")
            }
            Violation::AchronologicalEdge { edge } => write!(f, "edge {edge}: achronological"),
            Violation::MissingAttribution { edge } => {
                write!(f, "edge {edge}: missing or out-of-range attribution")
            }
            Violation::Cycle { nodes } => write!(f, "cycle through {}", nodes.join(" -> ")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A topic-scoped temporal DAG of papers.
///
/// Equality is structural: topic, node set and edge list. The year horizon is
/// a runtime limit and is not part of the file format.
#[derive(Debug, Clone)]
pub struct TheTree {
    pub topic: String,
    nodes: BTreeMap<String, PaperNode>,
    edges: Vec<EvolutionEdge>,
    horizon: i32,
}

impl PartialEq for TheTree {
    fn eq(&self, other: &Self) -> bool {
        self.topic == other.topic && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl TheTree {
    pub fn new(topic: impl Into<String>) -> Self {
        Self::with_horizon(topic, DEFAULT_HORIZON)
    }

    pub fn with_horizon(topic: impl Into<String>, horizon: i32) -> Self {
        Self {
            topic: topic.into(),
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            horizon,
        }
    }

    pub fn horizon(&self) -> i32 {
        self.horizon
    }

    pub fn set_horizon(&mut self, horizon: i32) {
        self.horizon = horizon;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&PaperNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &PaperNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[EvolutionEdge] {
        &self.edges
    }

    pub fn has_edge(&self, source: &str, target: &str) -> bool {
        self.edges
            .iter()
            .any(|e| e.source == source && e.target == target)
    }

    /// Sources of all edges pointing at `id`.
    pub fn predecessors(&self, id: &str) -> Vec<&PaperNode> {
        let mut seen = BTreeSet::new();
        self.edges
            .iter()
            .filter(|e| e.target == id)
            .filter(|e| seen.insert(e.source.as_str()))
            .filter_map(|e| self.nodes.get(&e.source))
            .collect()
    }

    pub fn successors(&self, id: &str) -> Vec<&PaperNode> {
        let mut seen = BTreeSet::new();
        self.edges
            .iter()
            .filter(|e| e.source == id)
            .filter(|e| seen.insert(e.target.as_str()))
            .filter_map(|e| self.nodes.get(&e.target))
            .collect()
    }

    fn check_node(&self, node: &PaperNode) -> Result<(), GraphError> {
        if node.title.trim().is_empty() {
            return Err(GraphError::EmptyTitle(node.id.clone()));
        }
        if node.year < YEAR_FLOOR || node.year > self.horizon {
            return Err(GraphError::InvalidYear {
                id: node.id.clone(),
                year: node.year,
                floor: YEAR_FLOOR,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    pub fn add_node(&mut self, node: PaperNode) -> Result<String, GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        self.check_node(&node)?;
        let id = node.id.clone();
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    /// Adds an edge and returns its index in [`TheTree::edges`].
    pub fn add_edge(&mut self, edge: EvolutionEdge) -> Result<usize, GraphError> {
        let source = self
            .nodes
            .get(&edge.source)
            .ok_or_else(|| GraphError::UnknownEndpoint(edge.source.clone()))?;
        let target = self
            .nodes
            .get(&edge.target)
            .ok_or_else(|| GraphError::UnknownEndpoint(edge.target.clone()))?;
        if source.year > target.year {
            return Err(GraphError::AchronologicalEdge {
                source_id: source.id.clone(),
                source_year: source.year,
                target_id: target.id.clone(),
                target_year: target.year,
            });
        }
        if edge.kind.is_reasoning() && !attribution_in_range(edge.attribution) {
            return Err(GraphError::MissingAttribution(
                edge.source.clone(),
                edge.target.clone(),
            ));
        }
        if edge.kind.is_reasoning() && self.reaches(&edge.target, &edge.source) {
            return Err(GraphError::CycleIntroduced(edge.source, edge.target));
        }
        self.edges.push(edge);
        Ok(self.edges.len() - 1)
    }

    /// Whether `to` is reachable from `from` over reasoning edges.
    fn reaches(&self, from: &str, to: &str) -> bool {
        if from == to {
            return true;
        }
        let mut stack = vec![from];
        let mut seen = BTreeSet::from([from]);
        while let Some(current) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.kind.is_reasoning()) {
                if e.source == current {
                    if e.target == to {
                        return true;
                    }
                    if seen.insert(e.target.as_str()) {
                        stack.push(e.target.as_str());
                    }
                }
            }
        }
        false
    }

    /// Reports every invariant violation. Never fails.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for node in self.nodes.values() {
            if node.title.trim().is_empty() {
                violations.push(Violation::EmptyTitle {
                    node: node.id.clone(),
                });
            }
            if node.year < YEAR_FLOOR || node.year > self.horizon {
                violations.push(Violation::InvalidYear {
                    node: node.id.clone(),
                    year: node.year,
                });
            }
            if let Some(score) = &node.importance {
                if !score.is_consistent() {
                    violations.push(Violation::InconsistentImportance {
                        node: node.id.clone(),
                    });
                }
            }
        }
        for (i, edge) in self.edges.iter().enumerate() {
            let mut dangling = false;
            for endpoint in [&edge.source, &edge.target] {
                if !self.nodes.contains_key(endpoint) {
                    dangling = true;
                    violations.push(Violation::UnknownEndpoint {
                        edge: i,
                        endpoint: endpoint.clone(),
                    });
                }
            }
            if !dangling && self.nodes[&edge.source].year > self.nodes[&edge.target].year {
                violations.push(Violation::AchronologicalEdge { edge: i });
            }
            if edge.kind.is_reasoning() && !attribution_in_range(edge.attribution) {
                violations.push(Violation::MissingAttribution { edge: i });
            }
        }
        if let Err(cycle) = self.topological_order() {
            violations.push(Violation::Cycle { nodes: cycle });
        }
        ValidationReport { violations }
    }

    /// Kahn's algorithm over reasoning edges between known nodes. Ties are
    /// resolved by id so the order is deterministic. On failure returns the
    /// ids left with non-zero in-degree.
    pub fn topological_order(&self) -> Result<Vec<String>, Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.keys().map(|k| (k.as_str(), 0)).collect();
        let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
        for e in self.edges.iter().filter(|e| e.kind.is_reasoning()) {
            if !self.nodes.contains_key(&e.source) || !self.nodes.contains_key(&e.target) {
                continue;
            }
            out.entry(e.source.as_str())
                .or_default()
                .push(e.target.as_str());
            *indegree.get_mut(e.target.as_str()).expect("known node") += 1;
        }
        let mut ready: BTreeSet<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(k, _)| *k)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(next) = ready.pop_first() {
            order.push(next.to_string());
            for target in out.get(next).into_iter().flatten() {
                let d = indegree.get_mut(target).expect("known node");
                *d -= 1;
                if *d == 0 {
                    ready.insert(target);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            Err(indegree
                .into_iter()
                .filter(|(_, d)| *d > 0)
                .map(|(k, _)| k.to_string())
                .collect())
        }
    }

    pub fn to_document(&self) -> TreeDocument {
        TreeDocument {
            topic: self.topic.clone(),
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.clone(),
        }
    }

    /// Builds a tree from a document without enforcing invariants, so legacy
    /// data can be loaded and then inspected with [`TheTree::validate`].
    /// Later duplicates of a node id overwrite earlier ones.
    pub fn from_document(doc: TreeDocument) -> Self {
        let mut tree = TheTree::new(doc.topic);
        for node in doc.nodes {
            tree.nodes.insert(node.id.clone(), node);
        }
        tree.edges = doc.edges;
        tree
    }

    /// Graphviz rendering: nodes labelled with title and year, edges with
    /// their kind and attribution.
    pub fn to_dot(&self) -> String {
        let mut out = format!(
            "digraph \"{}\" {{\n  rankdir=LR;\n",
            dot_escape(&self.topic)
        );
        for n in self.nodes.values() {
            out.push_str(&format!(
                "  \"{}\" [label=\"{}\\n{}\"];\n",
                dot_escape(&n.id),
                dot_escape(&n.title),
                n.year
            ));
        }
        for e in &self.edges {
            let label = match e.attribution {
                Some(a) => format!("{} {a:.2}", e.kind.as_str()),
                None => e.kind.as_str().to_string(),
            };
            let style = if e.kind.is_reasoning() {
                ""
            } else {
                ", style=dashed"
            };
            out.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{label}\"{style}];\n",
                dot_escape(&e.source),
                dot_escape(&e.target)
            ));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let value: Value = serde_json::from_str(text).map_err(|e| GraphError::SchemaViolation {
            path: "$".into(),
            message: e.to_string(),
        })?;
        check_required(&value)?;
        let doc: TreeDocument =
            serde_path_to_error::deserialize(value).map_err(|e| GraphError::SchemaViolation {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        Ok(Self::from_document(doc))
    }
}

pub(crate) fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn attribution_in_range(score: Option<f64>) -> bool {
    matches!(score, Some(s) if (0.0..=1.0).contains(&s))
}

/// On-disk form of a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDocument {
    pub topic: String,
    pub nodes: Vec<PaperNode>,
    pub edges: Vec<EvolutionEdge>,
}

const NODE_KEYS: [&str; 7] = [
    "id",
    "title",
    "abstract",
    "authors",
    "venue",
    "year",
    "importance",
];
const EDGE_KEYS: [&str; 6] = ["source", "target", "kind", "nli", "attribution", "evidence"];

// Every key is required (nullable ones may be null), so a missing key is
// reported at its own path rather than at the enclosing object.
fn check_required(value: &Value) -> Result<(), GraphError> {
    let violation = |path: String, message: &str| GraphError::SchemaViolation {
        path,
        message: message.to_string(),
    };
    let root = value
        .as_object()
        .ok_or_else(|| violation("$".into(), "expected an object"))?;
    for key in ["topic", "nodes", "edges"] {
        if !root.contains_key(key) {
            return Err(violation(key.into(), "missing field"));
        }
    }
    for (section, keys) in [("nodes", &NODE_KEYS[..]), ("edges", &EDGE_KEYS[..])] {
        let Some(items) = root[section].as_array() else {
            return Err(violation(section.into(), "expected an array"));
        };
        for (i, item) in items.iter().enumerate() {
            let Some(obj) = item.as_object() else {
                return Err(violation(format!("{section}[{i}]"), "expected an object"));
            };
            for key in keys {
                if !obj.contains_key(*key) {
                    return Err(violation(format!("{section}[{i}].{key}"), "missing field"));
                }
            }
        }
    }
    Ok(())
}
