//! Think-Verbalize-Cite-Verify node expansion.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::graph::{EvolutionEdge, PaperNode, RelationKind};
use crate::oracle::{Oracle, OracleError};
use crate::ranli::{verify_link, AttributionResult, RanliConfig, RanliError};
use crate::text::truncate_words;

#[derive(Debug, Error)]
pub enum TvcvError {
    #[error("the oracle proposed no candidates")]
    NoCandidates,
    #[error("no corpus document supports the candidate")]
    NoSupportFound,
    #[error("candidate cannot move from {from:?} to {to:?}")]
    InvalidTransition {
        from: CandidateStatus,
        to: CandidateStatus,
    },
    #[error("all {attempts} candidates were rejected")]
    ExpansionExhausted {
        attempts: usize,
        rejected: Vec<Candidate>,
    },
    #[error(transparent)]
    Ranli(#[from] RanliError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Thought,
    Verbalized,
    Cited,
    Verified,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    NoSupport,
    Attribution,
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub statement: String,
    pub proposed_paper: Option<PaperNode>,
    pub supporting_docs: Vec<String>,
    pub status: CandidateStatus,
    pub rejection: Option<Rejection>,
    pub attribution: Option<AttributionResult>,
}

impl Candidate {
    pub fn new(statement: impl Into<String>) -> Self {
        Self {
            statement: statement.into(),
            proposed_paper: None,
            supporting_docs: Vec::new(),
            status: CandidateStatus::Thought,
            rejection: None,
            attribution: None,
        }
    }

    /// Moves one step forward, or to rejected from any live state.
    fn advance(&mut self, to: CandidateStatus) -> Result<(), TvcvError> {
        use CandidateStatus::*;
        let ok = match (self.status, to) {
            (Rejected, _) => false,
            (_, Rejected) => true,
            (Thought, Verbalized) | (Verbalized, Cited) | (Cited, Verified) => true,
            _ => false,
        };
        if !ok {
            return Err(TvcvError::InvalidTransition {
                from: self.status,
                to,
            });
        }
        self.status = to;
        Ok(())
    }

    fn reject(&mut self, reason: Rejection) {
        self.status = CandidateStatus::Rejected;
        self.rejection = Some(reason);
    }

    fn require(&self, status: CandidateStatus, next: CandidateStatus) -> Result<(), TvcvError> {
        if self.status == status {
            Ok(())
        } else {
            Err(TvcvError::InvalidTransition {
                from: self.status,
                to: next,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvcvConfig {
    /// Candidates requested per think step.
    pub k: usize,
    pub max_summary_chars: usize,
    pub theta_cite: f64,
    pub top_n: usize,
    pub max_retries: usize,
    pub ranli: RanliConfig,
}

impl Default for TvcvConfig {
    fn default() -> Self {
        Self {
            k: 3,
            max_summary_chars: 512,
            theta_cite: 0.5,
            top_n: 5,
            max_retries: 3,
            ranli: RanliConfig::default(),
        }
    }
}

pub fn think(
    path: &[PaperNode],
    topic: &str,
    hints: &[String],
    k: usize,
    oracle: &dyn Oracle,
) -> Result<Vec<Candidate>, TvcvError> {
    let candidates: Vec<Candidate> = oracle
        .propose(path, topic, hints, k)?
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .take(k)
        .map(Candidate::new)
        .collect();
    if candidates.is_empty() {
        return Err(TvcvError::NoCandidates);
    }
    Ok(candidates)
}

pub fn verbalize(
    candidate: &mut Candidate,
    max_chars: usize,
    oracle: &dyn Oracle,
) -> Result<(), TvcvError> {
    candidate.require(CandidateStatus::Thought, CandidateStatus::Verbalized)?;
    let summary = oracle.summarize(&candidate.statement, max_chars)?;
    let summary = truncate_words(summary.trim(), max_chars);
    if !summary.is_empty() {
        candidate.statement = summary;
    }
    candidate.advance(CandidateStatus::Verbalized)
}

/// Grounds the statement in the papers of `pool`: those with similarity at
/// least `theta_cite`, best `top_n` first, ties by id. The best match becomes
/// the proposed paper.
pub fn cite<'a>(
    candidate: &mut Candidate,
    pool: impl IntoIterator<Item = &'a PaperNode>,
    config: &TvcvConfig,
    oracle: &dyn Oracle,
) -> Result<(), TvcvError> {
    candidate.require(CandidateStatus::Verbalized, CandidateStatus::Cited)?;
    let mut scored: Vec<(f64, &PaperNode)> = Vec::new();
    for paper in pool {
        let score = oracle.similarity(&candidate.statement, &paper.summary_text())?;
        if score >= config.theta_cite {
            scored.push((score, paper));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id.cmp(&b.1.id)));
    scored.truncate(config.top_n);
    let Some((_, best)) = scored.first() else {
        candidate.reject(Rejection::NoSupport);
        return Err(TvcvError::NoSupportFound);
    };
    candidate.proposed_paper = Some((*best).clone());
    candidate.supporting_docs = scored.iter().map(|(_, p)| p.id.clone()).collect();
    candidate.advance(CandidateStatus::Cited)
}

/// Temporal check first, then RA-NLI attribution.
pub fn verify(
    candidate: &mut Candidate,
    parent: &PaperNode,
    corpus: &Corpus,
    config: &TvcvConfig,
    oracle: &dyn Oracle,
) -> Result<(), TvcvError> {
    candidate.require(CandidateStatus::Cited, CandidateStatus::Verified)?;
    let year = candidate
        .proposed_paper
        .as_ref()
        .map(|p| p.year)
        .expect("cited candidates carry a paper");
    if year < parent.year {
        candidate.reject(Rejection::Temporal);
        return Ok(());
    }
    let result = verify_link(
        parent,
        &candidate.statement,
        &candidate.supporting_docs,
        corpus,
        &config.ranli,
        oracle,
    )?;
    let accepted = result.accepted;
    candidate.attribution = Some(result);
    if accepted {
        candidate.advance(CandidateStatus::Verified)
    } else {
        candidate.reject(Rejection::Attribution);
        Ok(())
    }
}

fn edge_for(parent: &PaperNode, candidate: &Candidate) -> (PaperNode, EvolutionEdge) {
    let paper = candidate
        .proposed_paper
        .clone()
        .expect("verified candidates carry a paper");
    let attribution = candidate
        .attribution
        .as_ref()
        .expect("verified candidates carry an attribution");
    let edge = EvolutionEdge {
        source: parent.id.clone(),
        target: paper.id.clone(),
        kind: RelationKind::EvolvesInto,
        nli: Some(attribution.nli.label),
        attribution: Some(attribution.r_attr),
        evidence: attribution.passages.clone(),
    };
    (paper, edge)
}

/// Verbalize, cite and verify one candidate. Returns whether it verified.
fn process(
    candidate: &mut Candidate,
    parent: &PaperNode,
    corpus: &Corpus,
    exclude: &BTreeSet<String>,
    config: &TvcvConfig,
    oracle: &dyn Oracle,
) -> Result<bool, TvcvError> {
    verbalize(candidate, config.max_summary_chars, oracle)?;
    let pool = corpus.papers.values().filter(|p| !exclude.contains(&p.id));
    match cite(candidate, pool, config, oracle) {
        Ok(()) => {}
        Err(TvcvError::NoSupportFound) => return Ok(false),
        Err(e) => return Err(e),
    }
    verify(candidate, parent, corpus, config, oracle)?;
    Ok(candidate.status == CandidateStatus::Verified)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub paper: PaperNode,
    pub edge: EvolutionEdge,
    pub candidate: Candidate,
    /// Candidates processed, the accepted one included.
    pub attempts: usize,
    pub rejected: Vec<Candidate>,
}

/// Think once, then work through the candidates until one verifies or
/// `max_retries` have been tried. Papers in `exclude` cannot be cited.
#[allow(clippy::too_many_arguments)]
pub fn expand_node(
    path: &[PaperNode],
    topic: &str,
    hints: &[String],
    corpus: &Corpus,
    exclude: &BTreeSet<String>,
    config: &TvcvConfig,
    oracle: &dyn Oracle,
) -> Result<Expansion, TvcvError> {
    let parent = path.last().ok_or(TvcvError::NoCandidates)?;
    let candidates = think(path, topic, hints, config.k.max(1), oracle)?;
    let mut rejected = Vec::new();
    let mut attempts = 0;
    for mut candidate in candidates.into_iter().take(config.max_retries) {
        attempts += 1;
        if process(&mut candidate, parent, corpus, exclude, config, oracle)? {
            let (paper, edge) = edge_for(parent, &candidate);
            return Ok(Expansion {
                paper,
                edge,
                candidate,
                attempts,
                rejected,
            });
        }
        rejected.push(candidate);
    }
    Err(TvcvError::ExpansionExhausted { attempts, rejected })
}

/// Runs verbalize, cite and verify on `child`'s own summary as the
/// statement. Returns the edge when the child is cited as itself and
/// verifies.
pub fn validate_successor(
    parent: &PaperNode,
    child: &PaperNode,
    corpus: &Corpus,
    exclude: &BTreeSet<String>,
    config: &TvcvConfig,
    oracle: &dyn Oracle,
) -> Result<Option<EvolutionEdge>, TvcvError> {
    let mut candidate = Candidate::new(child.summary_text());
    if !process(&mut candidate, parent, corpus, exclude, config, oracle)? {
        return Ok(None);
    }
    let (paper, edge) = edge_for(parent, &candidate);
    Ok((paper.id == child.id).then_some(edge))
}
