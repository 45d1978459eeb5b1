//! Evaluation: ranking metrics, set overlap, temporal intervals, review
//! accuracy and the year-masked completion protocol.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EvolutionEdge, PaperNode, RelationKind, TheTree};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to score")]
    EmptyPredictions,
    #[error("ground-truth set is empty")]
    EmptyTruth,
    #[error("tree has no edges")]
    NoEdges,
    #[error("no node published in {0}")]
    NoTargets(i32),
    #[error("inconsistent proportions: {0}")]
    InconsistentProportions(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub target_id: String,
    pub ranked_candidates: Vec<String>,
    /// 1-based position of the target, absent when it was not ranked.
    pub rank_of_target: Option<usize>,
}

impl RankedPrediction {
    pub fn new(target_id: impl Into<String>, ranked_candidates: Vec<String>) -> Self {
        let target_id = target_id.into();
        let rank_of_target = ranked_candidates
            .iter()
            .position(|c| *c == target_id)
            .map(|i| i + 1);
        Self {
            target_id,
            ranked_candidates,
            rank_of_target,
        }
    }

    /// The stored rank, or |candidates| + 1 when the target is missing.
    pub fn pessimistic_rank(&self) -> usize {
        self.rank_of_target
            .unwrap_or(self.ranked_candidates.len() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingTargets {
    /// Rank a missing target just past the last candidate.
    #[default]
    Pessimistic,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub hit_at: BTreeMap<usize, f64>,
    pub mr: f64,
    pub mrr: f64,
    pub median_rank: f64,
    pub count: usize,
}

pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];

pub fn rank_metrics(
    predictions: &[RankedPrediction],
    ks: &[usize],
) -> Result<MetricsReport, EvalError> {
    rank_metrics_with(predictions, ks, MissingTargets::Pessimistic)
}

pub fn rank_metrics_with(
    predictions: &[RankedPrediction],
    ks: &[usize],
    missing: MissingTargets,
) -> Result<MetricsReport, EvalError> {
    let mut ranks: Vec<usize> = predictions
        .iter()
        .filter_map(|p| match missing {
            MissingTargets::Pessimistic => Some(p.pessimistic_rank()),
            MissingTargets::Drop => p.rank_of_target,
        })
        .collect();
    if ranks.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    Ok(metrics_from_ranks(&mut ranks, ks))
}

/// Metrics over raw 1-based ranks.
pub fn metrics_from_ranks(ranks: &mut [usize], ks: &[usize]) -> MetricsReport {
    let n = ranks.len() as f64;
    let hit_at = ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
        .collect();
    let mr = ranks.iter().map(|&r| r as f64).sum::<f64>() / n;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    ranks.sort_unstable();
    let mid = ranks.len() / 2;
    let median_rank = if ranks.len() % 2 == 1 {
        ranks[mid] as f64
    } else {
        (ranks[mid - 1] + ranks[mid]) as f64 / 2.0
    };
    MetricsReport {
        hit_at,
        mr,
        mrr,
        median_rank,
        count: ranks.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub avg_time_diff: Option<f64>,
}

/// 2PR/(P+R), or 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Overlap of predicted and true items. `time_pairs` are
/// (predicted year, true year) for matched items; their mean absolute
/// difference is reported.
pub fn set_metrics<T: Ord>(
    predicted: &BTreeSet<T>,
    truth: &BTreeSet<T>,
    time_pairs: Option<&[(i32, i32)]>,
) -> Result<SetMetrics, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let hits = predicted.intersection(truth).count() as f64;
    let recall = hits / truth.len() as f64;
    let precision = if predicted.is_empty() {
        0.0
    } else {
        hits / predicted.len() as f64
    };
    let avg_time_diff = time_pairs.filter(|p| !p.is_empty()).map(|pairs| {
        pairs
            .iter()
            .map(|(a, b)| f64::from((a - b).abs()))
            .sum::<f64>()
            / pairs.len() as f64
    });
    Ok(SetMetrics {
        recall,
        precision,
        f1: f1_score(precision, recall),
        avg_time_diff,
    })
}

/// Mean of child year − parent year over all edges.
pub fn avg_temporal_interval(tree: &TheTree) -> Result<f64, EvalError> {
    let deltas: Vec<f64> = tree
        .edges()
        .iter()
        .filter_map(|e| {
            let s = tree.node(&e.source)?;
            let t = tree.node(&e.target)?;
            Some(f64::from(t.year - s.year))
        })
        .collect();
    if deltas.is_empty() {
        return Err(EvalError::NoEdges);
    }
    Ok(deltas.iter().sum::<f64>() / deltas.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusAccuracy {
    pub status: String,
    /// P(actual is this status | actual accept).
    pub proportion: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewInputs {
    pub p_accept: f64,
    pub accept_accuracy: f64,
    pub p_reject: f64,
    pub reject_accuracy: f64,
    #[serde(default)]
    pub statuses: Vec<StatusAccuracy>,
}

/// Raw confusion counts: per class, how many were judged correctly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewCounts {
    pub reject_correct: u64,
    pub reject_total: u64,
    /// (status, correct, total) for each accepted status.
    pub statuses: Vec<(String, u64, u64)>,
    /// Correct accept/reject calls among accepted papers.
    pub accept_correct: u64,
}

impl ReviewCounts {
    pub fn accept_total(&self) -> u64 {
        self.statuses.iter().map(|s| s.2).sum()
    }

    pub fn to_inputs(&self) -> Result<ReviewInputs, EvalError> {
        let accept = self.accept_total();
        let total = accept + self.reject_total;
        if total == 0 || accept == 0 || self.reject_total == 0 {
            return Err(EvalError::InconsistentProportions(
                "a class has no papers".into(),
            ));
        }
        let ratio = |a: u64, b: u64| a as f64 / b as f64;
        Ok(ReviewInputs {
            p_accept: ratio(accept, total),
            accept_accuracy: ratio(self.accept_correct, accept),
            p_reject: ratio(self.reject_total, total),
            reject_accuracy: ratio(self.reject_correct, self.reject_total),
            statuses: self
                .statuses
                .iter()
                .map(|(status, correct, n)| StatusAccuracy {
                    status: status.clone(),
                    proportion: ratio(*n, accept),
                    accuracy: if *n == 0 { 0.0 } else { ratio(*correct, *n) },
                })
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewTotals {
    pub accept_reject: f64,
    /// Present when per-status accuracies were given.
    pub status: Option<f64>,
}

/// Total = P(acc)·Acc + P(rej)·Rej; status total replaces Acc with
/// Σ_s P(s|acc)·Acc_s.
pub fn review_accuracy(inputs: &ReviewInputs) -> Result<ReviewTotals, EvalError> {
    let unit = |name: &str, v: f64| {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(EvalError::InconsistentProportions(format!(
                "{name} = {v} is outside [0, 1]"
            )))
        }
    };
    unit("p_accept", inputs.p_accept)?;
    unit("p_reject", inputs.p_reject)?;
    unit("accept_accuracy", inputs.accept_accuracy)?;
    unit("reject_accuracy", inputs.reject_accuracy)?;
    if (inputs.p_accept + inputs.p_reject - 1.0).abs() > PROPORTION_TOLERANCE {
        return Err(EvalError::InconsistentProportions(
            "P(accept) + P(reject) must be 1".into(),
        ));
    }
    let accept_reject =
        inputs.p_accept * inputs.accept_accuracy + inputs.p_reject * inputs.reject_accuracy;
    let status = if inputs.statuses.is_empty() {
        None
    } else {
        for s in &inputs.statuses {
            unit(&s.status, s.proportion)?;
            unit(&s.status, s.accuracy)?;
        }
        let sum: f64 = inputs.statuses.iter().map(|s| s.proportion).sum();
        if (sum - 1.0).abs() > PROPORTION_TOLERANCE {
            return Err(EvalError::InconsistentProportions(
                "status proportions must sum to 1".into(),
            ));
        }
        let within: f64 = inputs
            .statuses
            .iter()
            .map(|s| s.proportion * s.accuracy)
            .sum();
        Some(inputs.p_accept * within + inputs.p_reject * inputs.reject_accuracy)
    };
    Ok(ReviewTotals {
        accept_reject,
        status,
    })
}

/// A masked node with its edges to history nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskTarget {
    pub node: PaperNode,
    pub edges: Vec<EvolutionEdge>,
}

/// History = nodes before `year` and the edges among them. Targets are the
/// nodes of `year` with their edges to history.
pub fn mask_by_year(tree: &TheTree, year: i32) -> Result<(TheTree, Vec<MaskTarget>), EvalError> {
    let mut doc = tree.to_document();
    doc.nodes.retain(|n| n.year < year);
    let kept: BTreeSet<String> = doc.nodes.iter().map(|n| n.id.clone()).collect();
    doc.edges
        .retain(|e| kept.contains(&e.source) && kept.contains(&e.target));
    let mut history = TheTree::from_document(doc);
    history.set_horizon(tree.horizon());
    let targets: Vec<MaskTarget> = tree
        .nodes()
        .filter(|n| n.year == year)
        .map(|n| MaskTarget {
            node: n.clone(),
            edges: tree
                .edges()
                .iter()
                .filter(|e| {
                    (e.target == n.id && kept.contains(&e.source))
                        || (e.source == n.id && kept.contains(&e.target))
                })
                .cloned()
                .collect(),
        })
        .collect();
    if targets.is_empty() {
        return Err(EvalError::NoTargets(year));
    }
    Ok((history, targets))
}

/// Orders candidate nodes for a masked target.
pub trait Ranker {
    fn rank(
        &self,
        history: &TheTree,
        target: &MaskTarget,
        candidates: &[MaskTarget],
    ) -> Vec<String>;
}

fn anchors(target: &MaskTarget) -> BTreeSet<&str> {
    target
        .edges
        .iter()
        .map(|e| {
            if e.target == target.node.id {
                e.source.as_str()
            } else {
                e.target.as_str()
            }
        })
        .collect()
}

/// Baseline ranker: Jaccard overlap between each candidate's history
/// anchors and the target's, then importance, then id.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdjacencyRanker;

impl Ranker for AdjacencyRanker {
    fn rank(
        &self,
        _history: &TheTree,
        target: &MaskTarget,
        candidates: &[MaskTarget],
    ) -> Vec<String> {
        let query = anchors(target);
        let mut scored: Vec<(f64, f64, &str)> = candidates
            .iter()
            .map(|c| {
                let own = anchors(c);
                let union = query.union(&own).count();
                let overlap = if union == 0 {
                    0.0
                } else {
                    query.intersection(&own).count() as f64 / union as f64
                };
                let importance = c.node.importance_value().unwrap_or(0.0);
                (overlap, importance, c.node.id.as_str())
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.total_cmp(&a.1))
                .then(a.2.cmp(b.2))
        });
        scored
            .into_iter()
            .map(|(_, _, id)| id.to_string())
            .collect()
    }
}

/// Masks `year`, ranks every target among that year's nodes and scores
/// the ranks.
pub fn completion_predictions(
    tree: &TheTree,
    year: i32,
    ranker: &dyn Ranker,
) -> Result<Vec<RankedPrediction>, EvalError> {
    let (history, targets) = mask_by_year(tree, year)?;
    Ok(targets
        .iter()
        .map(|t| RankedPrediction::new(t.node.id.clone(), ranker.rank(&history, t, &targets)))
        .collect())
}

/// Ranks relation kinds for each masked edge by their frequency in
/// history, most common first, ties in declaration order.
pub fn relation_predictions(tree: &TheTree, year: i32) -> Result<Vec<RankedPrediction>, EvalError> {
    let (history, targets) = mask_by_year(tree, year)?;
    let mut counts: BTreeMap<RelationKind, usize> =
        RelationKind::ALL.iter().map(|&k| (k, 0)).collect();
    for e in history.edges() {
        *counts.entry(e.kind).or_default() += 1;
    }
    let mut order: Vec<RelationKind> = RelationKind::ALL.to_vec();
    order.sort_by(|a, b| counts[b].cmp(&counts[a]).then(a.cmp(b)));
    let names: Vec<String> = order.iter().map(|k| k.as_str().to_string()).collect();
    Ok(targets
        .iter()
        .flat_map(|t| t.edges.iter())
        .map(|e| RankedPrediction::new(e.kind.as_str(), names.clone()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearComparison {
    pub year: i32,
    pub reasoning: MetricsReport,
    pub citation: MetricsReport,
}

/// Runs the completion protocol on both graphs for each year.
pub fn compare_graphs(
    tree_reasoning: &TheTree,
    tree_citation: &TheTree,
    ranker: &dyn Ranker,
    years: &[i32],
    ks: &[usize],
) -> Result<Vec<YearComparison>, EvalError> {
    years
        .iter()
        .map(|&year| {
            Ok(YearComparison {
                year,
                reasoning: rank_metrics(
                    &completion_predictions(tree_reasoning, year, ranker)?,
                    ks,
                )?,
                citation: rank_metrics(&completion_predictions(tree_citation, year, ranker)?, ks)?,
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionLine {
    target: String,
    candidates: Vec<String>,
}

/// Reads `{target, candidates}` lines.
pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<RankedPrediction>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PredictionLine = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(RankedPrediction::new(parsed.target, parsed.candidates));
    }
    Ok(out)
}

/// Header plus one row per labelled report: Hit@k columns, MR, MRR,
/// MedianRank.
pub fn metrics_to_csv(rows: &[(String, &MetricsReport)]) -> String {
    let ks: BTreeSet<usize> = rows
        .iter()
        .flat_map(|(_, r)| r.hit_at.keys().copied())
        .collect();
    let mut out = String::from("label");
    for k in &ks {
        out.push_str(&format!(",Hit@{k}"));
    }
    out.push_str(",MR,MRR,MedianRank\n");
    for (label, r) in rows {
        out.push_str(label);
        for k in &ks {
            match r.hit_at.get(k) {
                Some(v) => out.push_str(&format!(",{v:.4}")),
                None => out.push(','),
            }
        }
        out.push_str(&format!(",{:.4},{:.4},{}\n", r.mr, r.mrr, r.median_rank));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranked(ranks: &[usize]) -> Vec<RankedPrediction> {
        ranks
            .iter()
            .map(|&r| {
                let mut c: Vec<String> = (0..10).map(|i| format!("x{i}")).collect();
                c[r - 1] = "t".into();
                RankedPrediction::new("t", c)
            })
            .collect()
    }

    #[test]
    fn rank_fixture() {
        let m = rank_metrics(&ranked(&[1, 3, 7]), &[1, 3, 5]).unwrap();
        assert!((m.hit_at[&1] - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.hit_at[&3] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.hit_at[&5] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.mr - 11.0 / 3.0).abs() < 1e-12);
        assert!((m.mrr - 0.4921).abs() < 1e-4);
        assert_eq!(m.median_rank, 3.0);
    }

    #[test]
    fn rank_trivial_cases() {
        let m = rank_metrics(&ranked(&[1, 1]), &[1, 3]).unwrap();
        assert_eq!((m.hit_at[&1], m.mrr, m.mr), (1.0, 1.0, 1.0));
        let m = rank_metrics(&ranked(&[2]), &[1, 2]).unwrap();
        assert_eq!((m.hit_at[&1], m.hit_at[&2], m.mrr), (0.0, 1.0, 0.5));
        assert_eq!(metrics_from_ranks(&mut [1, 4], &[1]).median_rank, 2.5);
        assert!(matches!(
            rank_metrics(&[], &[1]),
            Err(EvalError::EmptyPredictions)
        ));
    }

    #[test]
    fn missing_targets_policy() {
        let p = vec![
            RankedPrediction::new("t", vec!["a".into(), "t".into()]),
            RankedPrediction::new("t", vec!["a".into(), "b".into(), "c".into()]),
        ];
        assert_eq!(p[1].pessimistic_rank(), 4);
        assert_eq!(rank_metrics(&p, &[1]).unwrap().mr, 3.0);
        assert_eq!(
            rank_metrics_with(&p, &[1], MissingTargets::Drop)
                .unwrap()
                .count,
            1
        );
    }

    #[test]
    fn set_examples() {
        assert!((f1_score(0.67, 0.84) - 0.7454).abs() < 1e-4);
        let a: BTreeSet<u32> = [1, 2, 3].into();
        let same = set_metrics(&a, &a, None).unwrap();
        assert_eq!((same.recall, same.precision, same.f1), (1.0, 1.0, 1.0));
        let b: BTreeSet<u32> = [7, 8].into();
        let none = set_metrics(&a, &b, Some(&[(2001, 2003), (2010, 2009)])).unwrap();
        assert_eq!((none.recall, none.precision, none.f1), (0.0, 0.0, 0.0));
        assert_eq!(none.avg_time_diff, Some(1.5));
        assert!(matches!(
            set_metrics(&a, &BTreeSet::new(), None),
            Err(EvalError::EmptyTruth)
        ));
    }

    fn chain(years: &[i32]) -> TheTree {
        let mut t = TheTree::new("t");
        for (i, y) in years.iter().enumerate() {
            t.add_node(PaperNode::new(format!("n{i}"), "x", *y))
                .unwrap();
        }
        for i in 1..years.len() {
            t.add_edge(
                EvolutionEdge::new(
                    format!("n{}", i - 1),
                    format!("n{i}"),
                    RelationKind::EvolvesInto,
                )
                .with_attribution(0.9),
            )
            .unwrap();
        }
        t
    }

    #[test]
    fn intervals() {
        assert_eq!(
            avg_temporal_interval(&chain(&[2000, 2001, 2003, 2009])).unwrap(),
            3.0
        );
        assert_eq!(avg_temporal_interval(&chain(&[2000, 2000])).unwrap(), 0.0);
        assert_eq!(avg_temporal_interval(&chain(&[2000, 2004])).unwrap(), 4.0);
        assert!(matches!(
            avg_temporal_interval(&chain(&[2000])),
            Err(EvalError::NoEdges)
        ));
    }

    #[test]
    fn review_examples() {
        let simple = ReviewInputs {
            p_accept: 0.3,
            accept_accuracy: 0.9,
            p_reject: 0.7,
            reject_accuracy: 0.2,
            statuses: vec![],
        };
        assert!((review_accuracy(&simple).unwrap().accept_reject - 0.41).abs() < 1e-12);
        let status = ReviewInputs {
            p_accept: 0.5,
            accept_accuracy: 1.0,
            p_reject: 0.5,
            reject_accuracy: 1.0,
            statuses: [
                ("poster", 0.8, 1.0),
                ("spotlight", 0.15, 0.0),
                ("oral", 0.05, 0.0),
            ]
            .iter()
            .map(|(s, p, a)| StatusAccuracy {
                status: s.to_string(),
                proportion: *p,
                accuracy: *a,
            })
            .collect(),
        };
        let totals = review_accuracy(&status).unwrap();
        assert_eq!(totals.accept_reject, 1.0);
        assert!((totals.status.unwrap() - 0.9).abs() < 1e-12);
        let bad = ReviewInputs {
            p_reject: 0.6,
            ..simple
        };
        assert!(matches!(
            review_accuracy(&bad),
            Err(EvalError::InconsistentProportions(_))
        ));
    }

    #[test]
    fn masking() {
        let t = chain(&[2018, 2019, 2020]);
        let (history, targets) = mask_by_year(&t, 2020).unwrap();
        assert_eq!(history.len(), 2);
        assert_eq!(history.edges().len(), 1);
        assert_eq!(targets.len(), 1);
        assert_eq!(targets[0].edges.len(), 1);
        let (history, targets) = mask_by_year(&t, 2018).unwrap();
        assert!(history.is_empty());
        assert_eq!(targets[0].node.id, "n0");
        assert!(matches!(
            mask_by_year(&t, 1999),
            Err(EvalError::NoTargets(1999))
        ));
    }

    #[test]
    fn predictions_jsonl() {
        let text = "{\"target\":\"a\",\"candidates\":[\"b\",\"a\"]}\n{\"target\":\"z\",\"candidates\":[]}\n";
        let p = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(p[0].rank_of_target, Some(2));
        assert_eq!(p[1].rank_of_target, None);
        assert!(read_predictions("{\"target\":1}".as_bytes()).is_err());
        let m = rank_metrics(&p, &[1]).unwrap();
        let csv = metrics_to_csv(&[("run".into(), &m)]);
        assert!(csv.starts_with("label,Hit@1,MR,MRR,MedianRank\n"));
    }

    #[test]
    fn relation_ranking_uses_history_frequency() {
        let t = chain(&[2000, 2001, 2002]);
        let p = relation_predictions(&t, 2002).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].rank_of_target, Some(1));
    }
}
