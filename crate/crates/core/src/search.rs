//! Self-guided temporal Monte Carlo tree search over a corpus.
//!
//! Selection uses an upper-confidence score with a semantic priority bonus,
//! scaled by temporal coherence. Expansion runs TVCV, so every edge that
//! enters the search tree has been verified. Fully enumerated subtrees are
//! marked exhausted and skipped, which lets small corpora be searched
//! completely.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::graph::{EvolutionEdge, GraphError, ImportanceScore, PaperNode, TheTree};
use crate::importance::{
    combined_importance, CentralityError, CentralityTable, CentralityWeights, CitationGraph,
};
use crate::oracle::{Oracle, OracleError};
use crate::tvcv::{expand_node, validate_successor, TvcvConfig, TvcvError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("corpus has no papers")]
    EmptyCorpus,
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("node {0} has not been visited")]
    UnvisitedNode(String),
    #[error("paper {0} has no importance score")]
    MissingImportance(String),
    #[error("path of {nodes} nodes needs {} attributions, got {given}", nodes - 1)]
    MissingAttribution { nodes: usize, given: usize },
    #[error("path step {from} ({from_year}) -> {to} ({to_year}) goes back in time")]
    Achronological {
        from: String,
        from_year: i32,
        to: String,
        to_year: i32,
    },
    #[error(transparent)]
    Centrality(#[from] CentralityError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tvcv(#[from] TvcvError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl From<crate::ranli::RanliError> for SearchError {
    fn from(e: crate::ranli::RanliError) -> Self {
        SearchError::Tvcv(TvcvError::Ranli(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Base exploration constant.
    pub c0: f64,
    /// Weight of the semantic priority bonus.
    pub lambda: f64,
    /// Year-gap decay of temporal coherence.
    pub tau: f64,
    pub max_iterations: usize,
    pub max_path_length: usize,
    /// Seed handed to the mock oracle; the search itself is deterministic.
    pub seed: u64,
    /// Slope of the exploration ramp in the average reward.
    pub reward_sensitivity: f64,
    /// Graph share of node importance.
    pub gamma: f64,
    pub tvcv: TvcvConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            lambda: 0.5,
            tau: 5.0,
            max_iterations: 500,
            max_path_length: 15,
            seed: 0,
            reward_sensitivity: 0.5,
            gamma: 0.5,
            tvcv: TvcvConfig::default(),
        }
    }
}

impl SearchConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.to_string()));
        if !(self.c0 > 0.0) {
            return bad("c0 must be positive");
        }
        if !(self.lambda >= 0.0) {
            return bad("lambda must be non-negative");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if !(self.reward_sensitivity >= 0.0) {
            return bad("reward_sensitivity must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.max_path_length == 0 {
            return bad("max_path_length must be at least 1");
        }
        let r = &self.tvcv.ranli;
        if !(0.0..=1.0).contains(&r.alpha) || !(0.0..=1.0).contains(&r.attr_threshold) {
            return bad("alpha and attr_threshold must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tvcv.theta_cite) {
            return bad("theta_cite must lie in [0, 1]");
        }
        if self.tvcv.top_n == 0 || r.top_k == 0 || self.tvcv.max_retries == 0 {
            return bad("top_n, top_k and max_retries must be at least 1");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| SearchError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

/// 0 when the candidate predates the path tail, else
/// exp(−max(0, Δ−1)/τ) for a gap of Δ years.
pub fn temp_coherence(candidate_year: i32, path_tail_year: i32, tau: f64) -> f64 {
    if candidate_year < path_tail_year {
        return 0.0;
    }
    let gap = f64::from(candidate_year - path_tail_year);
    (-(gap - 1.0).max(0.0) / tau).exp()
}

/// c0 · (1 + sensitivity · max(0, avg_reward)).
pub fn exploration_coefficient(c0: f64, avg_reward: f64, sensitivity: f64) -> f64 {
    c0 * (1.0 + sensitivity * avg_reward.max(0.0))
}

/// The exploration term c·sqrt(ln N(p) / N(v)).
pub fn exploration_term(visits: u64, parent_visits: u64, c: f64) -> f64 {
    c * ((parent_visits as f64).ln() / visits as f64).sqrt()
}

/// (Q/N + c·sqrt(ln N(p)/N) + λ·priority) · coherence.
pub fn sgt_uct_value(
    total_reward: f64,
    visits: u64,
    parent_visits: u64,
    c: f64,
    lambda: f64,
    priority: f64,
    coherence: f64,
) -> f64 {
    (total_reward / visits as f64 + exploration_term(visits, parent_visits, c) + lambda * priority)
        * coherence
}

pub fn sgt_uct(
    node: &SearchNode,
    parent_visits: u64,
    c: f64,
    lambda: f64,
    priority: f64,
    coherence: f64,
) -> Result<f64, SearchError> {
    if node.visits == 0 {
        return Err(SearchError::UnvisitedNode(node.paper_id.clone()));
    }
    Ok(sgt_uct_value(
        node.total_reward,
        node.visits,
        parent_visits.max(node.visits),
        c,
        lambda,
        priority,
        coherence,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub paper_id: String,
    pub year: i32,
    pub visits: u64,
    pub total_reward: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub cached_priority: Option<f64>,
    /// Verified edge from the parent.
    pub edge: Option<EvolutionEdge>,
    /// No further children will be added.
    pub expanded: bool,
    /// The subtree below has been searched completely.
    pub exhausted: bool,
    /// Papers whose candidacy as a child was rejected.
    pub rejected: BTreeSet<String>,
}

impl SearchNode {
    pub fn new(paper: &PaperNode) -> Self {
        Self {
            paper_id: paper.id.clone(),
            year: paper.year,
            visits: 0,
            total_reward: 0.0,
            parent: None,
            children: Vec::new(),
            cached_priority: None,
            edge: None,
            expanded: false,
            exhausted: false,
            rejected: BTreeSet::new(),
        }
    }

    pub fn with_priority(mut self, priority: f64) -> Self {
        self.cached_priority = Some(priority);
        self
    }
}

/// Arena of search nodes; index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
}

impl SearchTree {
    pub fn new(root: SearchNode) -> Self {
        Self { nodes: vec![root] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &SearchNode {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut SearchNode {
        &mut self.nodes[i]
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn add_child(&mut self, parent: usize, mut child: SearchNode) -> usize {
        let i = self.nodes.len();
        child.parent = Some(parent);
        self.nodes.push(child);
        self.nodes[parent].children.push(i);
        i
    }

    /// Node indices from the root down to `i`.
    pub fn path_to(&self, i: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Marks `i` exhausted when it can grow no further, then walks upward.
    fn refresh_exhausted(&mut self, mut i: usize) {
        loop {
            let node = &self.nodes[i];
            let done = node.expanded && node.children.iter().all(|&c| self.nodes[c].exhausted);
            if !done || node.exhausted {
                return;
            }
            self.nodes[i].exhausted = true;
            match self.nodes[i].parent {
                Some(p) => i = p,
                None => return,
            }
        }
    }
}

/// Adds one visit and `reward` to `leaf` and every ancestor.
pub fn backpropagate(tree: &mut SearchTree, leaf: usize, reward: f64) {
    let mut cur = Some(leaf);
    while let Some(i) = cur {
        let node = tree.node_mut(i);
        node.visits += 1;
        node.total_reward += reward;
        cur = node.parent;
    }
}

/// Descends from the root to a node that still needs work: one that can be
/// expanded, or a terminal not yet marked exhausted. Exhausted subtrees are
/// skipped. Unvisited children come first, ordered by λ·priority·coherence
/// then paper id; otherwise the highest SGT-UCT score wins, ties to the
/// lowest paper id.
pub fn select(tree: &SearchTree, config: &SearchConfig, c: f64) -> usize {
    let mut cur = 0;
    loop {
        let node = tree.node(cur);
        if !node.expanded {
            return cur;
        }
        let live: Vec<usize> = node
            .children
            .iter()
            .copied()
            .filter(|&ch| !tree.node(ch).exhausted)
            .collect();
        if live.is_empty() {
            return cur;
        }
        let coherence = |ch: usize| temp_coherence(tree.node(ch).year, node.year, config.tau);
        let priority = |ch: usize| tree.node(ch).cached_priority.unwrap_or(0.0);
        let by_id = |a: usize, b: usize| tree.node(a).paper_id.cmp(&tree.node(b).paper_id);
        let unvisited = live.iter().copied().filter(|&ch| tree.node(ch).visits == 0);
        let first_visit = unvisited.min_by(|&a, &b| {
            let ka = config.lambda * priority(a) * coherence(a);
            let kb = config.lambda * priority(b) * coherence(b);
            kb.total_cmp(&ka).then(by_id(a, b))
        });
        cur = match first_visit {
            Some(ch) => ch,
            None => live
                .iter()
                .copied()
                .map(|ch| {
                    let n = tree.node(ch);
                    let score = sgt_uct_value(
                        n.total_reward,
                        n.visits,
                        node.visits.max(n.visits),
                        c,
                        config.lambda,
                        priority(ch),
                        coherence(ch),
                    );
                    (score, ch)
                })
                .min_by(|a, b| b.0.total_cmp(&a.0).then(by_id(a.1, b.1)))
                .map(|(_, ch)| ch)
                .expect("live children"),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReward {
    pub node_sum: f64,
    pub gen: f64,
    pub attr: f64,
    pub total: f64,
}

/// ΣS(v) + Σ continuation·coherence over steps + Σ attribution over edges.
/// `attributions[i]` belongs to the edge path[i] → path[i+1].
pub fn path_reward(
    path: &[PaperNode],
    attributions: &[f64],
    tau: f64,
    oracle: &dyn Oracle,
) -> Result<PathReward, SearchError> {
    if path.is_empty() {
        return Ok(PathReward {
            node_sum: 0.0,
            gen: 0.0,
            attr: 0.0,
            total: 0.0,
        });
    }
    if attributions.len() + 1 != path.len() {
        return Err(SearchError::MissingAttribution {
            nodes: path.len(),
            given: attributions.len(),
        });
    }
    for w in path.windows(2) {
        if w[1].year < w[0].year {
            return Err(SearchError::Achronological {
                from: w[0].id.clone(),
                from_year: w[0].year,
                to: w[1].id.clone(),
                to_year: w[1].year,
            });
        }
    }
    let mut node_sum = 0.0;
    for p in path {
        node_sum += p
            .importance_value()
            .ok_or_else(|| SearchError::MissingImportance(p.id.clone()))?;
    }
    let mut gen = 0.0;
    for i in 1..path.len() {
        let coherence = temp_coherence(path[i].year, path[i - 1].year, tau);
        gen += oracle.continuation(&path[..i], &path[i])? * coherence;
    }
    let attr: f64 = attributions.iter().sum();
    Ok(PathReward {
        node_sum,
        gen,
        attr,
        total: node_sum + gen + attr,
    })
}

/// Scores every paper lacking importance: graph centrality over the corpus
/// citation graph blended with the oracle's judgment. Existing scores are
/// kept.
pub fn score_corpus(
    corpus: &Corpus,
    topic: &str,
    gamma: f64,
    oracle: &dyn Oracle,
) -> Result<BTreeMap<String, PaperNode>, SearchError> {
    let mut papers = corpus.papers.clone();
    if papers.values().all(|p| p.importance.is_some()) {
        return Ok(papers);
    }
    let graph = CitationGraph::new(
        papers.keys().cloned(),
        corpus
            .citations
            .iter()
            .filter(|c| papers.contains_key(&c.source) && papers.contains_key(&c.target))
            .map(|c| (c.source.clone(), c.target.clone())),
    );
    let table = CentralityTable::compute(&graph)?;
    let weights = if graph.len() == 1 {
        CentralityWeights::UNIFORM
    } else {
        table.dynamic_weights()
    };
    for paper in papers.values_mut() {
        if paper.importance.is_some() {
            continue;
        }
        let g = table.graph_score(&paper.id, &weights)?;
        let l = oracle.importance(paper, topic)?;
        let score: ImportanceScore = combined_importance(g, l, gamma)?;
        paper.importance = Some(score);
    }
    Ok(papers)
}

/// Corpus paper closest to the root concept, ties to the lowest id.
pub fn choose_root<'a>(
    papers: &'a BTreeMap<String, PaperNode>,
    root_concept: &str,
    oracle: &dyn Oracle,
) -> Result<&'a PaperNode, SearchError> {
    let mut best: Option<(f64, &PaperNode)> = None;
    for paper in papers.values() {
        let s = oracle.similarity(root_concept, &paper.summary_text())?;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, paper));
        }
    }
    best.map(|(_, p)| p).ok_or(SearchError::EmptyCorpus)
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub tree: TheTree,
    pub search: SearchTree,
    pub best_path: Vec<String>,
    pub best_reward: PathReward,
    pub iterations: usize,
    pub backprops: usize,
}

struct Searcher<'a> {
    corpus: Corpus,
    topic: &'a str,
    config: &'a SearchConfig,
    oracle: &'a dyn Oracle,
    tree: SearchTree,
    best: (PathReward, Vec<String>, Vec<f64>),
}

impl Searcher<'_> {
    fn paper(&self, id: &str) -> &PaperNode {
        &self.corpus.papers[id]
    }

    fn priority(&self, paper: &PaperNode) -> Result<f64, SearchError> {
        Ok(self.oracle.priority(&paper.summary_text(), self.topic)?)
    }

    /// Papers and edge attributions along the root → `i` path.
    fn path_of(&self, i: usize) -> (Vec<PaperNode>, Vec<f64>) {
        let idx = self.tree.path_to(i);
        let papers = idx
            .iter()
            .map(|&j| self.paper(&self.tree.node(j).paper_id).clone())
            .collect();
        let attrs = idx[1..]
            .iter()
            .map(|&j| {
                self.tree
                    .node(j)
                    .edge
                    .as_ref()
                    .and_then(|e| e.attribution)
                    .unwrap_or(0.0)
            })
            .collect();
        (papers, attrs)
    }

    fn offer(&mut self, papers: &[PaperNode], attrs: &[f64]) -> Result<f64, SearchError> {
        let reward = path_reward(papers, attrs, self.config.tau, self.oracle)?;
        if reward.total > self.best.0.total {
            self.best = (
                reward,
                papers.iter().map(|p| p.id.clone()).collect(),
                attrs.to_vec(),
            );
        }
        Ok(reward.total)
    }

    /// Chronological successors of the tail not excluded, by (year, id).
    fn successors(&self, tail: &PaperNode, exclude: &BTreeSet<String>) -> Vec<&PaperNode> {
        let mut out: Vec<&PaperNode> = self
            .corpus
            .papers
            .values()
            .filter(|p| p.year >= tail.year && !exclude.contains(&p.id))
            .collect();
        out.sort_by(|a, b| a.year.cmp(&b.year).then(a.id.cmp(&b.id)));
        out
    }

    /// Tries to add one verified child to `leaf`. Marks the leaf expanded
    /// when nothing is left to try.
    fn expand(&mut self, leaf: usize) -> Result<Option<usize>, SearchError> {
        let (papers, _) = self.path_of(leaf);
        if papers.len() >= self.config.max_path_length {
            self.tree.node_mut(leaf).expanded = true;
            return Ok(None);
        }
        let node = self.tree.node(leaf);
        // Only papers on the path are barred from citation; children and
        // rejected papers are merely not suggested again.
        let on_path: BTreeSet<String> = papers.iter().map(|p| p.id.clone()).collect();
        let mut exclude = on_path.clone();
        exclude.extend(
            node.children
                .iter()
                .map(|&c| self.tree.node(c).paper_id.clone()),
        );
        exclude.extend(node.rejected.iter().cloned());
        let tail = papers.last().expect("non-empty path");
        let hints: Vec<String> = self
            .successors(tail, &exclude)
            .into_iter()
            .map(PaperNode::summary_text)
            .collect();
        if hints.is_empty() {
            self.tree.node_mut(leaf).expanded = true;
            return Ok(None);
        }
        let outcome = expand_node(
            &papers,
            self.topic,
            &hints,
            &self.corpus,
            &on_path,
            &self.config.tvcv,
            self.oracle,
        );
        let rejected = match &outcome {
            Ok(exp) => exp.rejected.as_slice(),
            Err(TvcvError::ExpansionExhausted { rejected, .. }) => rejected.as_slice(),
            _ => &[],
        };
        let newly: Vec<String> = rejected
            .iter()
            .filter_map(|c| c.proposed_paper.as_ref().map(|p| p.id.clone()))
            .filter(|id| !exclude.contains(id))
            .collect();
        let progressed = !newly.is_empty();
        self.tree.node_mut(leaf).rejected.extend(newly);
        match outcome {
            Ok(exp) if exclude.contains(&exp.paper.id) => {
                // Bound to a paper already tried here; remember it so the
                // next attempt moves on.
                let fresh = self.tree.node_mut(leaf).rejected.insert(exp.paper.id);
                if !fresh && !progressed {
                    self.tree.node_mut(leaf).expanded = true;
                }
                Ok(None)
            }
            Ok(exp) => {
                let paper = self.paper(&exp.paper.id).clone();
                let mut child = SearchNode::new(&paper).with_priority(self.priority(&paper)?);
                child.edge = Some(exp.edge);
                Ok(Some(self.tree.add_child(leaf, child)))
            }
            Err(TvcvError::ExpansionExhausted { .. }) => {
                if !progressed {
                    self.tree.node_mut(leaf).expanded = true;
                }
                Ok(None)
            }
            Err(TvcvError::NoCandidates) => {
                self.tree.node_mut(leaf).expanded = true;
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Greedy rollout by priority over verified successors.
    fn simulate(&mut self, from: usize) -> Result<f64, SearchError> {
        let (mut papers, mut attrs) = self.path_of(from);
        while papers.len() < self.config.max_path_length {
            let tail = papers.last().expect("non-empty").clone();
            let exclude: BTreeSet<String> = papers.iter().map(|p| p.id.clone()).collect();
            let mut options: Vec<(f64, PaperNode)> = Vec::new();
            for p in self.successors(&tail, &exclude) {
                options.push((self.priority(p)?, p.clone()));
            }
            options.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
            let mut next = None;
            for (_, p) in options {
                let verdict = validate_successor(
                    &tail,
                    &p,
                    &self.corpus,
                    &exclude,
                    &self.config.tvcv,
                    self.oracle,
                )?;
                if let Some(edge) = verdict {
                    next = Some((p, edge.attribution.unwrap_or(0.0)));
                    break;
                }
            }
            let Some((p, a)) = next else { break };
            papers.push(p);
            attrs.push(a);
        }
        self.offer(&papers, &attrs)
    }

    fn output(&self) -> Result<TheTree, SearchError> {
        let mut tree = TheTree::new(self.topic);
        let (_, best_ids, best_attrs) = &self.best;
        for id in best_ids {
            if !tree.contains(id) {
                tree.add_node(self.paper(id).clone())?;
            }
        }
        // Best-path edges are taken from the search tree when present so
        // evidence is kept; rollout-only steps come from a fresh check.
        let mut pending: Vec<EvolutionEdge> = Vec::new();
        for (w, a) in best_ids.windows(2).zip(best_attrs) {
            let found = self
                .tree
                .nodes()
                .iter()
                .filter_map(|n| n.edge.as_ref())
                .find(|e| e.source == w[0] && e.target == w[1])
                .cloned();
            pending.push(found.unwrap_or_else(|| {
                EvolutionEdge::new(&w[0], &w[1], crate::graph::RelationKind::EvolvesInto)
                    .with_attribution(*a)
            }));
        }
        pending.extend(self.tree.nodes().iter().filter_map(|n| n.edge.clone()));
        for node in self.tree.nodes() {
            if !tree.contains(&node.paper_id) {
                tree.add_node(self.paper(&node.paper_id).clone())?;
            }
        }
        for edge in pending {
            if tree.has_edge(&edge.source, &edge.target) {
                continue;
            }
            match tree.add_edge(edge) {
                Ok(_) | Err(GraphError::CycleIntroduced(..)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(tree)
    }
}

/// Builds an evolution tree for `root_concept` from the corpus.
pub fn run(
    corpus: &Corpus,
    root_concept: &str,
    config: &SearchConfig,
    oracle: &dyn Oracle,
) -> Result<TheTree, SearchError> {
    Ok(run_detailed(corpus, root_concept, config, oracle)?.tree)
}

pub fn run_detailed(
    corpus: &Corpus,
    root_concept: &str,
    config: &SearchConfig,
    oracle: &dyn Oracle,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    if corpus.papers.is_empty() {
        return Err(SearchError::EmptyCorpus);
    }
    let scored = Corpus {
        papers: score_corpus(corpus, root_concept, config.gamma, oracle)?,
        ..corpus.clone()
    };
    let root = choose_root(&scored.papers, root_concept, oracle)?.clone();
    let root_node =
        SearchNode::new(&root).with_priority(oracle.priority(&root.summary_text(), root_concept)?);
    let initial = path_reward(std::slice::from_ref(&root), &[], config.tau, oracle)?;
    let mut s = Searcher {
        corpus: scored,
        topic: root_concept,
        config,
        oracle,
        tree: SearchTree::new(root_node),
        best: (initial, vec![root.id.clone()], Vec::new()),
    };
    let mut iterations = 0;
    let mut backprops = 0;
    while iterations < config.max_iterations && !s.tree.node(0).exhausted {
        iterations += 1;
        let root = s.tree.node(0);
        let avg = if root.visits == 0 {
            0.0
        } else {
            root.total_reward / root.visits as f64
        };
        let c = exploration_coefficient(config.c0, avg, config.reward_sensitivity);
        let leaf = select(&s.tree, config, c);
        if !s.tree.node(leaf).expanded {
            if let Some(child) = s.expand(leaf)? {
                let reward = s.simulate(child)?;
                backpropagate(&mut s.tree, child, reward);
                backprops += 1;
                continue;
            }
            if !s.tree.node(leaf).expanded {
                // Rejections were recorded; try this node again next time.
                continue;
            }
        }
        s.tree.refresh_exhausted(leaf);
        if s.tree.node(leaf).children.is_empty() {
            let (papers, attrs) = s.path_of(leaf);
            let reward = s.offer(&papers, &attrs)?;
            backpropagate(&mut s.tree, leaf, reward);
            backprops += 1;
        }
    }
    let tree = s.output()?;
    Ok(SearchOutcome {
        tree,
        best_path: s.best.1.clone(),
        best_reward: s.best.0,
        search: s.tree,
        iterations,
        backprops,
    })
}
