//! Retrieval-augmented NLI: checks that a claimed link is backed by the
//! cited documents and turns the verdict into an attribution score.

use std::io::{BufRead, Write};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::graph::{Evidence, NliLabel, PaperNode};
use crate::oracle::{NliVerdict, Oracle, OracleError};

#[derive(Debug, Error)]
pub enum RanliError {
    #[error("document {0} has no passages")]
    EmptyDocument(String),
    #[error("cited document {0} is not in the corpus")]
    MissingCitation(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RanliConfig {
    pub alpha: f64,
    pub attr_threshold: f64,
    /// Passages joined into the NLI premise.
    pub top_k: usize,
    /// Consult the LLM verifier on every verdict, not only neutral ones.
    pub strict_formula: bool,
}

impl Default for RanliConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            attr_threshold: 0.6,
            top_k: 3,
            strict_formula: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub nli: NliVerdict,
    /// entailment: probability; neutral: 0.5; contradiction: 0.
    pub nli_score: f64,
    pub llm_score: Option<f64>,
    pub alpha: f64,
    pub r_attr: f64,
    pub passages: Vec<Evidence>,
    pub accepted: bool,
}

/// Score contributed by the NLI verdict alone.
pub fn nli_score(verdict: &NliVerdict) -> f64 {
    match verdict.label {
        NliLabel::Entailment => verdict.probability,
        NliLabel::Neutral => 0.5,
        NliLabel::Contradiction => 0.0,
    }
}

static CITATION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[@([A-Za-z0-9][A-Za-z0-9_.:\-]*)\]").expect("valid regex"));

/// Outcome of looking up the document a statement cites via `[@id]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationCheck {
    pub doc_id: Option<String>,
    pub exists: bool,
    pub diagnostic: Option<String>,
}

pub fn check_citation(statement: &str, corpus: &Corpus) -> CitationCheck {
    let fail = |doc_id: Option<String>, message: String| CitationCheck {
        doc_id,
        exists: false,
        diagnostic: Some(message),
    };
    match CITATION.captures(statement) {
        Some(caps) => {
            let id = caps[1].to_string();
            if corpus.papers.contains_key(&id) {
                CitationCheck {
                    doc_id: Some(id),
                    exists: true,
                    diagnostic: None,
                }
            } else {
                let message = format!("unknown document {id}");
                fail(Some(id), message)
            }
        }
        None if statement.contains("[@") => fail(None, "malformed citation marker".into()),
        None => fail(None, "no citation marker".into()),
    }
}

/// True iff the statement's `[@id]` marker resolves in the corpus.
pub fn citation_exists(statement: &str, corpus: &Corpus) -> bool {
    check_citation(statement, corpus).exists
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPassage {
    pub index: usize,
    pub text: String,
    pub score: f64,
}

/// Top-`k` passages by similarity to the claim, best first, ties by index.
pub fn retrieve_passages(
    claim: &str,
    document: &Document,
    k: usize,
    oracle: &dyn Oracle,
) -> Result<Vec<ScoredPassage>, RanliError> {
    if document.passages.is_empty() {
        return Err(RanliError::EmptyDocument(document.id.clone()));
    }
    let mut scored = document
        .passages
        .iter()
        .enumerate()
        .map(|(index, text)| {
            Ok(ScoredPassage {
                index,
                text: text.clone(),
                score: oracle.similarity(claim, text)?,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.index.cmp(&b.index)));
    scored.truncate(k);
    Ok(scored)
}

/// NLI over (evidence premise, child statement), with the LLM verifier
/// consulted on neutral verdicts (or always, in strict mode).
pub fn attribution_score(
    parent_statement: &str,
    child_statement: &str,
    evidence: &[Evidence],
    config: &RanliConfig,
    oracle: &dyn Oracle,
) -> Result<AttributionResult, RanliError> {
    let alpha = config.alpha;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RanliError::InvalidAlpha(alpha));
    }
    let premise = if evidence.is_empty() {
        parent_statement.to_string()
    } else {
        evidence
            .iter()
            .map(|e| e.passage.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let nli = oracle.nli(&premise, child_statement)?;
    let base = nli_score(&nli);
    let consult = config.strict_formula || nli.label == NliLabel::Neutral;
    let llm_score = if consult {
        Some(
            oracle
                .verify(child_statement, &premise, parent_statement)?
                .score,
        )
    } else {
        None
    };
    let r_attr = match llm_score {
        Some(llm) => alpha * base + (1.0 - alpha) * llm,
        None => base,
    }
    .clamp(0.0, 1.0);
    let accepted = r_attr >= config.attr_threshold && nli.label != NliLabel::Contradiction;
    Ok(AttributionResult {
        nli,
        nli_score: base,
        llm_score,
        alpha,
        r_attr,
        passages: evidence.to_vec(),
        accepted,
    })
}

/// Best passages across several documents: each document contributes its
/// top `k`, then the pool is cut to `k` by score, ties by document order and
/// passage index.
pub fn gather_evidence(
    claim: &str,
    doc_ids: &[String],
    corpus: &Corpus,
    k: usize,
    oracle: &dyn Oracle,
) -> Result<Vec<Evidence>, RanliError> {
    let mut pool: Vec<(f64, usize, Evidence)> = Vec::new();
    for (order, id) in doc_ids.iter().enumerate() {
        let document = corpus
            .document(id)
            .ok_or_else(|| RanliError::MissingCitation(id.clone()))?;
        for p in retrieve_passages(claim, &document, k, oracle)? {
            pool.push((
                p.score,
                order,
                Evidence {
                    document_id: id.clone(),
                    passage: p.text,
                    index: p.index,
                },
            ));
        }
    }
    pool.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.index.cmp(&b.2.index))
    });
    Ok(pool.into_iter().take(k).map(|(_, _, e)| e).collect())
}

/// Validates the link parent → child statement against the supporting
/// documents. An unresolvable document is a [`RanliError::MissingCitation`].
pub fn verify_link(
    parent: &PaperNode,
    child_statement: &str,
    supporting_docs: &[String],
    corpus: &Corpus,
    config: &RanliConfig,
    oracle: &dyn Oracle,
) -> Result<AttributionResult, RanliError> {
    let evidence = gather_evidence(
        child_statement,
        supporting_docs,
        corpus,
        config.top_k,
        oracle,
    )?;
    attribution_score(
        &parent.summary_text(),
        child_statement,
        &evidence,
        config,
        oracle,
    )
}

/// One line of a fact-verification batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactRecord {
    pub claim: String,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactResult {
    pub claim: String,
    pub doc_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
    pub nli: Option<NliLabel>,
    pub r_attr: Option<f64>,
    pub accepted: bool,
    pub missing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BatchSummary {
    pub total: usize,
    pub missing: usize,
    pub accepted: usize,
    pub missing_rate: f64,
}

/// Checks one fact. Supplied evidence is the premise; otherwise the top
/// passages of the cited document are.
pub fn verify_fact(
    fact: &FactRecord,
    corpus: &Corpus,
    config: &RanliConfig,
    oracle: &dyn Oracle,
) -> Result<FactResult, RanliError> {
    let mut result = FactResult {
        claim: fact.claim.clone(),
        doc_id: fact.doc_id.clone(),
        evidence: fact.evidence.clone(),
        nli: None,
        r_attr: None,
        accepted: false,
        missing: false,
    };
    let Some(paper) = corpus.paper(&fact.doc_id) else {
        result.missing = true;
        return Ok(result);
    };
    let evidence = match &fact.evidence {
        Some(text) => vec![Evidence {
            document_id: fact.doc_id.clone(),
            passage: text.clone(),
            index: 0,
        }],
        None => gather_evidence(
            &fact.claim,
            std::slice::from_ref(&fact.doc_id),
            corpus,
            config.top_k,
            oracle,
        )?,
    };
    let attribution = attribution_score(
        &paper.summary_text(),
        &fact.claim,
        &evidence,
        config,
        oracle,
    )?;
    result.nli = Some(attribution.nli.label);
    result.r_attr = Some(attribution.r_attr);
    result.accepted = attribution.accepted;
    Ok(result)
}

/// Verifies every fact in input order. Each fact is counted exactly once.
pub fn verify_facts(
    facts: &[FactRecord],
    corpus: &Corpus,
    config: &RanliConfig,
    oracle: &dyn Oracle,
) -> Result<(Vec<FactResult>, BatchSummary), RanliError> {
    let results = facts
        .iter()
        .map(|f| verify_fact(f, corpus, config, oracle))
        .collect::<Result<Vec<_>, _>>()?;
    let missing = results.iter().filter(|r| r.missing).count();
    let summary = BatchSummary {
        total: results.len(),
        missing,
        accepted: results.iter().filter(|r| r.accepted).count(),
        missing_rate: if results.is_empty() {
            0.0
        } else {
            missing as f64 / results.len() as f64
        },
    };
    Ok((results, summary))
}

pub fn read_facts<R: BufRead>(input: R) -> Result<Vec<FactRecord>, RanliError> {
    let mut facts = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        facts.push(serde_json::from_str(&line).map_err(|e| RanliError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(facts)
}

pub fn write_results<W: Write>(results: &[FactResult], mut out: W) -> std::io::Result<()> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
