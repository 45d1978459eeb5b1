use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use evotree::corpus::Corpus;
use evotree::graph::{EvolutionEdge, PaperNode, RelationKind, TheTree};
use evotree::importance::combined_importance;
use serde_json::Value;

fn evotree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evotree"))
        .args(args)
        .env_remove("EVOTREE_ORACLE_URL")
        .env_remove("EVOTREE_ORACLE_TIMEOUT_MS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn paper(id: &str, title: &str, year: i32) -> PaperNode {
    PaperNode::new(id, title, year)
}

fn write_corpus(dir: &Path) -> String {
    let corpus = Corpus::from_papers([
        paper("a", "recurrent networks with gated memory", 1997),
        paper("b", "attention for neural machine translation", 2014),
        paper("c", "transformer models built on attention", 2017),
        paper("d", "pretrained transformer language models", 2018),
        paper("e", "convolutional networks for images", 2012),
    ]);
    let path = dir.join("corpus.jsonl");
    fs::write(&path, corpus.to_jsonl()).unwrap();
    path.to_str().unwrap().to_string()
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn build_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let args = [
            "build",
            "--corpus",
            &corpus,
            "--topic",
            "recurrent networks",
            "--seed",
            "7",
            "--oracle",
            "mock",
            "--out",
            s(&out),
        ];
        stdout(&evotree(&args));
        fs::read(&out).unwrap()
    };
    let first = run("one.json");
    assert_eq!(first, run("two.json"));
    let tree = TheTree::from_json(std::str::from_utf8(&first).unwrap()).unwrap();
    assert!(tree.validate().is_valid());
    assert!(tree.contains("a"));
}

#[test]
fn eval_rank_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("p.jsonl");
    let lines = [1usize, 3, 7]
        .iter()
        .map(|&r| {
            let mut c: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
            c[r - 1] = "t".into();
            serde_json::json!({"target": "t", "candidates": c}).to_string()
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&preds, lines).unwrap();
    let report: Value = serde_json::from_str(&stdout(&evotree(&[
        "eval",
        "--predictions",
        s(&preds),
        "--ks",
        "1,3,5",
    ])))
    .unwrap();
    let m = &report["predictions"]["metrics"];
    assert!((m["mrr"].as_f64().unwrap() - 0.4921).abs() < 1e-4);
    assert_eq!(m["median_rank"].as_f64().unwrap(), 3.0);
    let csv = stdout(&evotree(&[
        "eval",
        "--predictions",
        s(&preds),
        "--format",
        "csv",
    ]));
    assert!(
        csv.starts_with("label,Hit@1,Hit@3,Hit@5,Hit@10,MR,MRR,MedianRank\npredictions,0.3333,")
    );
}

#[test]
fn usage_errors_exit_2() {
    let out = evotree(&["build", "--topic", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--corpus"));
    assert_eq!(
        evotree(&["build", "--corpus", "c", "--topic", "x", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(evotree(&["eval"]).status.code(), Some(2));
    assert_eq!(
        evotree(&["inspect", "--tree", "t.json", "--format", "csv"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(evotree(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn module_errors_exit_1() {
    let out = evotree(&["inspect", "--tree", "/nonexistent/tree.json"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let out = evotree(&[
        "build", "--corpus", &corpus, "--topic", "x", "--oracle", "remote",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("EVOTREE_ORACLE_URL"));
}

#[test]
fn help_everywhere() {
    for sub in [
        "ingest",
        "score",
        "build",
        "retrospect",
        "verify-facts",
        "eval",
        "inspect",
    ] {
        let out = evotree(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
    }
    assert_eq!(evotree(&["--help"]).status.code(), Some(0));
}

#[test]
fn ingest_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let surveys = dir.path().join("surveys");
    fs::create_dir(&surveys).unwrap();
    fs::write(
        surveys.join("rnn.md"),
        "A survey of sequence models\n\nGated recurrent units improved long range memory in sequence models [1]. \
         Attention mechanisms later replaced recurrence for translation tasks [2].\n\n\
         References\n\
         [1] S. Hochreiter and J. Schmidhuber, \"Long short-term memory,\" Neural Computation, vol. 9, no. 8, pp. 1735-1780, 1997.\n\
         [2] A. Vaswani et al., \"Attention is all you need,\" in Advances in Neural Information Processing Systems, 2017.\n",
    )
    .unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    stdout(&evotree(&[
        "ingest",
        "--in",
        s(&surveys),
        "--out",
        s(&corpus_path),
    ]));
    let corpus = Corpus::from_jsonl(&fs::read_to_string(&corpus_path).unwrap()).unwrap();
    assert_eq!(corpus.papers.len(), 2);
    assert!(corpus.integrity_errors().is_empty());
    let types: Vec<String> = fs::read_to_string(&corpus_path)
        .unwrap()
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["type"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    for t in ["paper", "pair", "survey_meta"] {
        assert!(types.iter().any(|x| x == t), "{t}");
    }

    let scored = stdout(&evotree(&[
        "score",
        "--corpus",
        s(&corpus_path),
        "--topic",
        "sequence models",
    ]));
    let scored = Corpus::from_jsonl(&scored).unwrap();
    for p in scored.papers.values() {
        assert!(p.importance.as_ref().unwrap().is_consistent());
    }
}

#[test]
fn verify_facts_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path());
    let facts = dir.path().join("facts.jsonl");
    fs::write(
        &facts,
        "{\"claim\":\"attention for neural machine translation\",\"doc_id\":\"b\",\"evidence\":\"attention for neural machine translation\"}\n\
         {\"claim\":\"something\",\"doc_id\":\"zzz\"}\n",
    )
    .unwrap();
    let out = evotree(&["verify-facts", "--facts", s(&facts), "--corpus", &corpus]);
    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["accepted"], true);
    assert_eq!(lines[0]["nli"], "entailment");
    assert_eq!(lines[1]["missing"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 missing (0.5000)"));
}

fn scored_tree() -> TheTree {
    let mut t = TheTree::new("sequence models");
    for (id, title, year, s) in [
        ("a", "recurrent networks with gated memory", 1997, 0.6),
        ("b", "attention for neural machine translation", 2014, 0.7),
        ("c", "transformer models built on attention", 2017, 0.9),
    ] {
        t.add_node(paper(id, title, year).with_importance(combined_importance(s, s, 0.5).unwrap()))
            .unwrap();
    }
    t.add_edge(EvolutionEdge::new("a", "b", RelationKind::EvolvesInto).with_attribution(0.8))
        .unwrap();
    t.add_edge(EvolutionEdge::new("b", "c", RelationKind::EvolvesInto).with_attribution(0.9))
        .unwrap();
    t
}

#[test]
fn retrospect_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("trees");
    fs::create_dir(&trees).unwrap();
    let tree_path = trees.join("seq.json");
    fs::write(&tree_path, scored_tree().to_json()).unwrap();
    let abs = dir.path().join("abstract.txt");
    fs::write(&abs, "models built on attention").unwrap();

    let out = stdout(&evotree(&[
        "retrospect",
        "--title",
        "transformer models",
        "--abstract-file",
        s(&abs),
        "--trees-dir",
        s(&trees),
        "--theta-sim",
        "0.1",
    ]));
    let json: Value = serde_json::from_str(&out).unwrap();
    let ids: Vec<&str> = json["paths"][0]["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["a", "b", "c"]);
    let dot = stdout(&evotree(&[
        "retrospect",
        "--title",
        "transformer models",
        "--trees-dir",
        s(&trees),
        "--theta-sim",
        "0.1",
        "--format",
        "dot",
    ]));
    assert!(dot.starts_with("digraph"));

    let text = stdout(&evotree(&["inspect", "--tree", s(&tree_path)]));
    assert!(text.contains("nodes: 3") && text.contains("valid"));
    let dot = stdout(&evotree(&[
        "inspect",
        "--tree",
        s(&tree_path),
        "--format",
        "dot",
    ]));
    assert!(dot.contains("\"a\" -> \"b\""));
    let summary: Value =
        serde_json::from_str(&stdout(&evotree(&["eval", "--tree", s(&tree_path)]))).unwrap();
    assert_eq!(
        summary["trees"][0]["avg_temporal_interval"].as_f64(),
        Some(10.0)
    );
}
