//! Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use evotree::corpus::Corpus;
use evotree::graph::{EvolutionEdge, NliLabel, PaperNode, RelationKind, TheTree};
use evotree::importance::combined_importance;
use evotree::oracle::{Fixtures, MockOracle, NliFixture, Oracle};
use evotree::search::{choose_root, path_reward, SearchConfig};
use evotree::tvcv::validate_successor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scored(id: &str, title: &str, year: i32, s: f64) -> PaperNode {
    PaperNode::new(id, title, year).with_importance(combined_importance(s, s, 0.5).unwrap())
}

/// A corpus of `n` papers whose titles share no tokens, with random years,
/// importance and NLI behaviour. The root concept is paper 0's title.
pub struct Toy {
    pub corpus: Corpus,
    pub oracle: MockOracle,
    pub root_concept: String,
}

pub fn toy_corpus(seed: u64, n: usize) -> Toy {
    let mut r = rng(seed);
    let mut fixtures = Fixtures::default();
    let mut papers = Vec::new();
    for i in 0..n {
        let title = format!("w{i}a w{i}b w{i}c");
        let year = if i == 0 {
            2000
        } else {
            2000 + r.gen_range(0..5)
        };
        let s: f64 = r.gen_range(0.0..1.0);
        let roll: f64 = r.gen();
        if roll < 0.5 {
            fixtures.nli.push(NliFixture {
                premise: None,
                hypothesis: title.clone(),
                label: NliLabel::Entailment,
                probability: r.gen_range(0.4..1.0),
            });
        } else if roll < 0.7 {
            fixtures.nli.push(NliFixture {
                premise: None,
                hypothesis: title.clone(),
                label: NliLabel::Contradiction,
                probability: r.gen_range(0.5..1.0),
            });
        }
        papers.push(scored(&format!("p{i}"), &title, year, s));
    }
    Toy {
        corpus: Corpus::from_papers(papers.clone()),
        oracle: MockOracle::with_fixtures(seed, fixtures),
        root_concept: papers[0].title.clone(),
    }
}

/// Best PathReward over every valid path from the root, found by DFS with
/// the same edge-validity check the search uses. Also returns the number
/// of paths visited.
pub fn exhaustive_best(toy: &Toy, config: &SearchConfig) -> (f64, usize) {
    let oracle: &dyn Oracle = &toy.oracle;
    let root = choose_root(&toy.corpus.papers, &toy.root_concept, oracle)
        .unwrap()
        .clone();
    let mut best = f64::NEG_INFINITY;
    let mut count = 0;
    let mut path = vec![root];
    let mut attrs = Vec::new();
    dfs(toy, config, &mut path, &mut attrs, &mut best, &mut count);
    (best, count)
}

fn dfs(
    toy: &Toy,
    config: &SearchConfig,
    path: &mut Vec<PaperNode>,
    attrs: &mut Vec<f64>,
    best: &mut f64,
    count: &mut usize,
) {
    *count += 1;
    let r = path_reward(path, attrs, config.tau, &toy.oracle)
        .unwrap()
        .total;
    if r > *best {
        *best = r;
    }
    if path.len() >= config.max_path_length {
        return;
    }
    let tail = path.last().unwrap().clone();
    let exclude: BTreeSet<String> = path.iter().map(|p| p.id.clone()).collect();
    let next: Vec<PaperNode> = toy
        .corpus
        .papers
        .values()
        .filter(|p| p.year >= tail.year && !exclude.contains(&p.id))
        .cloned()
        .collect();
    for p in next {
        let edge = validate_successor(&tail, &p, &toy.corpus, &exclude, &config.tvcv, &toy.oracle)
            .unwrap();
        if let Some(edge) = edge {
            path.push(p);
            attrs.push(edge.attribution.unwrap());
            dfs(toy, config, path, attrs, best, count);
            path.pop();
            attrs.pop();
        }
    }
}

/// Random valid tree: nodes with random years, edges only from earlier to
/// later-or-equal years in a fixed node order so no cycle can form.
pub fn random_tree(seed: u64, max_nodes: usize) -> TheTree {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_nodes);
    let mut years: Vec<i32> = (0..n).map(|_| 1990 + r.gen_range(0..30)).collect();
    years.sort_unstable();
    let mut tree = TheTree::new(format!("topic {seed}"));
    for (i, y) in years.iter().enumerate() {
        let mut node = PaperNode::new(format!("n{i}"), format!("paper {i} {}", r.gen::<u32>()), *y)
            .with_abstract(if r.gen_bool(0.5) {
                format!("abstract \"{i}\" \u{e9}")
            } else {
                String::new()
            });
        if r.gen_bool(0.7) {
            let g: f64 = r.gen();
            let l: f64 = r.gen();
            node = node.with_importance(combined_importance(g, l, r.gen()).unwrap());
        }
        if r.gen_bool(0.3) {
            node.authors = vec![format!("Author {i}")];
            node.venue = Some("Venue".into());
        }
        tree.add_node(node).unwrap();
    }
    for j in 1..n {
        for i in 0..j {
            if r.gen_bool(0.3) {
                let kind = RelationKind::ALL[r.gen_range(0..3)];
                let mut edge = EvolutionEdge::new(format!("n{i}"), format!("n{j}"), kind);
                if kind.is_reasoning() || r.gen_bool(0.5) {
                    edge = edge.with_attribution(r.gen());
                }
                tree.add_edge(edge).unwrap();
            }
        }
    }
    tree
}

/// Random directed graph on `n` nodes, ids "v0".."v{n-1}", no self loops.
pub fn random_digraph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && r.gen_bool(p) {
                edges.push((format!("v{i}"), format!("v{j}")));
            }
        }
    }
    edges
}

/// PageRank from the dense Google matrix, iterated to a fixed count.
/// Dangling columns are uniform. Indexed by sorted id.
pub fn pagerank_dense(ids: &[String], edges: &[(String, String)], damping: f64) -> Vec<f64> {
    let n = ids.len();
    let at = |id: &str| ids.iter().position(|x| x == id).unwrap();
    let mut adj = vec![vec![false; n]; n];
    for (s, t) in edges {
        adj[at(s)][at(t)] = true;
    }
    let mut g = vec![vec![0.0; n]; n];
    for j in 0..n {
        let outs = adj[j].iter().filter(|&&b| b).count();
        for i in 0..n {
            let link = if outs == 0 {
                1.0 / n as f64
            } else if adj[j][i] {
                1.0 / outs as f64
            } else {
                0.0
            };
            g[i][j] = damping * link + (1.0 - damping) / n as f64;
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..2000 {
        x = (0..n)
            .map(|i| (0..n).map(|j| g[i][j] * x[j]).sum())
            .collect();
    }
    x
}

/// Betweenness by enumerating every simple path between every ordered pair
/// and keeping the shortest ones.
pub fn betweenness_brute(ids: &[String], edges: &[(String, String)]) -> Vec<f64> {
    let n = ids.len();
    let at = |id: &str| ids.iter().position(|x| x == id).unwrap();
    let mut adj = vec![Vec::new(); n];
    for (s, t) in edges {
        let (s, t) = (at(s), at(t));
        if !adj[s].contains(&t) {
            adj[s].push(t);
        }
    }
    fn walk(adj: &[Vec<usize>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == t {
            out.push(path.clone());
            return;
        }
        for &w in &adj[v] {
            if !path.contains(&w) {
                path.push(w);
                walk(adj, t, path, out);
                path.pop();
            }
        }
    }
    let mut c = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut paths = Vec::new();
            walk(&adj, t, &mut vec![s], &mut paths);
            let Some(shortest) = paths.iter().map(Vec::len).min() else {
                continue;
            };
            let best: Vec<&Vec<usize>> = paths.iter().filter(|p| p.len() == shortest).collect();
            for (v, cv) in c.iter_mut().enumerate() {
                if v == s || v == t {
                    continue;
                }
                let through = best.iter().filter(|p| p.contains(&v)).count();
                *cv += through as f64 / best.len() as f64;
            }
        }
    }
    c
}

/// Random tree where every node is scored; years and scores come from small
/// pools so ties are common. Same-year citation edges may point either way.
pub fn random_scored_tree(r: &mut ChaCha8Rng, max_nodes: usize) -> TheTree {
    let n = r.gen_range(1..=max_nodes);
    let mut tree = TheTree::new("t");
    let pool = [0.2, 0.5, 0.5, 0.9];
    for i in 0..n {
        let s = pool[r.gen_range(0..pool.len())];
        tree.add_node(scored(
            &format!("n{i}"),
            &format!("n{i}"),
            2000 + r.gen_range(0..4),
            s,
        ))
        .unwrap();
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !r.gen_bool(0.35) {
                continue;
            }
            let kind = if r.gen_bool(0.5) {
                RelationKind::CitesPlain
            } else {
                RelationKind::EvolvesInto
            };
            let edge =
                EvolutionEdge::new(format!("n{i}"), format!("n{j}"), kind).with_attribution(0.8);
            // Rejected edges (achronological or cyclic) are simply skipped.
            let _ = tree.add_edge(edge);
        }
    }
    tree
}

/// Argmin of (year gap, −S, id) over sources of edges into `id`, found by
/// scanning every edge.
pub fn brute_predecessor(tree: &TheTree, id: &str) -> Option<String> {
    let current = tree.node(id).unwrap();
    let mut best: Option<(i32, f64, String)> = None;
    for e in tree.edges() {
        if e.target != id {
            continue;
        }
        let p = tree.node(&e.source).unwrap();
        if p.year > current.year {
            continue;
        }
        let key = (
            current.year - p.year,
            -p.importance_value().unwrap(),
            p.id.clone(),
        );
        let better = match &best {
            None => true,
            Some(b) => {
                key.0 < b.0 || (key.0 == b.0 && (key.1 < b.1 || (key.1 == b.1 && key.2 < b.2)))
            }
        };
        if better {
            best = Some(key);
        }
    }
    best.map(|b| b.2)
}
