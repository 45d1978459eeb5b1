use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExtractedConcept, LinkKind, LlmVerdict, NliVerdict, Oracle, OracleError};
use crate::graph::{NliLabel, PaperNode};
use crate::text::{tokens, truncate_words};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFixture {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationFixture {
    /// Id of the path's last paper.
    pub tail: String,
    pub candidate: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliFixture {
    /// `None` matches any premise.
    #[serde(default)]
    pub premise: Option<String>,
    pub hypothesis: String,
    pub label: NliLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyFixture {
    pub claim: String,
    #[serde(default)]
    pub evidence: Option<String>,
    pub score: f64,
    pub kind: LinkKind,
}

/// Scripted answers for the mock backend. Anything not scripted falls back to
/// a deterministic default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fixtures {
    /// Exact summary first, then case-insensitive keyword containment
    /// (longest keyword wins).
    pub priority: BTreeMap<String, f64>,
    /// Keyed by paper id, then by title.
    pub importance: BTreeMap<String, f64>,
    pub continuation: Vec<ContinuationFixture>,
    /// Path tail id to its designated successors: listed candidates continue
    /// the path with score 1, every other candidate with 0.
    pub successors: BTreeMap<String, Vec<String>>,
    pub similarity: Vec<PairFixture>,
    pub nli: Vec<NliFixture>,
    pub verify: Vec<VerifyFixture>,
    /// Path tail id to proposed statements.
    pub proposals: BTreeMap<String, Vec<String>>,
    pub summaries: BTreeMap<String, String>,
    /// Paragraph text (sentences joined by a space) to its concepts.
    pub concepts: BTreeMap<String, Vec<ExtractedConcept>>,
}

impl Fixtures {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Deterministic oracle: a pure function of its seed, fixtures and inputs.
///
/// Fallbacks when no fixture applies:
/// - priority, importance, continuation: seeded hash of the inputs in [0, 1)
/// - similarity: token Jaccard
/// - nli: identical texts entail with probability 1, anything else is neutral
/// - verify: seeded hash score; the kind follows the score's tercile
/// - propose: the first `k` hints
/// - summarize: the statement itself
/// - concepts: the first sentence with at least five tokens
#[derive(Debug, Clone)]
pub struct MockOracle {
    seed: u64,
    fixtures: Fixtures,
}

impl MockOracle {
    pub fn new(seed: u64) -> Self {
        Self::with_fixtures(seed, Fixtures::default())
    }

    pub fn with_fixtures(seed: u64, fixtures: Fixtures) -> Self {
        Self { seed, fixtures }
    }

    pub fn fixtures(&self) -> &Fixtures {
        &self.fixtures
    }

    pub fn fixtures_mut(&mut self) -> &mut Fixtures {
        &mut self.fixtures
    }

    fn hash_unit(&self, op: &str, parts: &[&str]) -> f64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(op.as_bytes());
        for part in parts {
            hasher.update([0x1f]);
            hasher.update(part.as_bytes());
        }
        let digest = hasher.finalize();
        let word = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        (word >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Jaccard similarity over lowercase alphanumeric tokens.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let left: BTreeSet<String> = tokens(a).collect();
    let right: BTreeSet<String> = tokens(b).collect();
    if left.is_empty() && right.is_empty() {
        return if a.trim() == b.trim() { 1.0 } else { 0.0 };
    }
    let inter = left.intersection(&right).count() as f64;
    let union = left.union(&right).count() as f64;
    inter / union
}

impl Oracle for MockOracle {
    fn priority(&self, node_summary: &str, topic: &str) -> Result<f64, OracleError> {
        if let Some(v) = self.fixtures.priority.get(node_summary) {
            return Ok(*v);
        }
        let lower = node_summary.to_lowercase();
        let keyword = self
            .fixtures
            .priority
            .iter()
            .filter(|(k, _)| !k.is_empty() && lower.contains(&k.to_lowercase()))
            .max_by(|(a, _), (b, _)| a.len().cmp(&b.len()).then_with(|| b.cmp(a)));
        if let Some((_, v)) = keyword {
            return Ok(*v);
        }
        Ok(self.hash_unit("priority", &[node_summary, topic]))
    }

    fn importance(&self, paper: &PaperNode, topic: &str) -> Result<f64, OracleError> {
        let fixtures = &self.fixtures.importance;
        if let Some(v) = fixtures
            .get(&paper.id)
            .or_else(|| fixtures.get(&paper.title))
        {
            return Ok(*v);
        }
        Ok(self.hash_unit("importance", &[&paper.id, topic]))
    }

    fn continuation(&self, path: &[PaperNode], candidate: &PaperNode) -> Result<f64, OracleError> {
        let tail = path.last().ok_or_else(|| {
            OracleError::InvalidInput("continuation needs a non-empty path".into())
        })?;
        if let Some(f) = self
            .fixtures
            .continuation
            .iter()
            .find(|f| f.tail == tail.id && f.candidate == candidate.id)
        {
            return Ok(f.score);
        }
        if let Some(next) = self.fixtures.successors.get(&tail.id) {
            return Ok(if next.contains(&candidate.id) {
                1.0
            } else {
                0.0
            });
        }
        Ok(self.hash_unit("continuation", &[&tail.id, &candidate.id]))
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        if a == b {
            return Ok(1.0);
        }
        if let Some(f) = self
            .fixtures
            .similarity
            .iter()
            .find(|f| (f.a == a && f.b == b) || (f.a == b && f.b == a))
        {
            return Ok(f.score);
        }
        Ok(jaccard(a, b))
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, OracleError> {
        let scripted = self.fixtures.nli.iter().find(|f| {
            f.hypothesis == hypothesis && f.premise.as_deref().is_none_or(|p| p == premise)
        });
        if let Some(f) = scripted {
            return Ok(NliVerdict {
                label: f.label,
                probability: f.probability,
            });
        }
        if premise.trim() == hypothesis.trim() {
            return Ok(NliVerdict {
                label: NliLabel::Entailment,
                probability: 1.0,
            });
        }
        Ok(NliVerdict {
            label: NliLabel::Neutral,
            probability: 0.5 + 0.5 * self.hash_unit("nli", &[premise, hypothesis]),
        })
    }

    fn verify(
        &self,
        claim: &str,
        evidence: &str,
        context: &str,
    ) -> Result<LlmVerdict, OracleError> {
        let scripted = self
            .fixtures
            .verify
            .iter()
            .find(|f| f.claim == claim && f.evidence.as_deref().is_none_or(|e| e == evidence));
        if let Some(f) = scripted {
            return Ok(LlmVerdict {
                score: f.score,
                kind: f.kind,
            });
        }
        let score = self.hash_unit("verify", &[claim, evidence, context]);
        let kind = if score >= 2.0 / 3.0 {
            LinkKind::DirectCitation
        } else if score >= 1.0 / 3.0 {
            LinkKind::Paraphrase
        } else {
            LinkKind::NoConnection
        };
        Ok(LlmVerdict { score, kind })
    }

    fn propose(
        &self,
        path: &[PaperNode],
        _topic: &str,
        hints: &[String],
        k: usize,
    ) -> Result<Vec<String>, OracleError> {
        let tail = path
            .last()
            .ok_or_else(|| OracleError::InvalidInput("propose needs a non-empty path".into()))?;
        let pool = self
            .fixtures
            .proposals
            .get(&tail.id)
            .map_or(hints, Vec::as_slice);
        Ok(pool.iter().take(k).cloned().collect())
    }

    fn summarize(&self, statement: &str, max_chars: usize) -> Result<String, OracleError> {
        let text = self
            .fixtures
            .summaries
            .get(statement)
            .map_or(statement, String::as_str);
        Ok(truncate_words(text, max_chars))
    }

    fn concepts(&self, sentences: &[String]) -> Result<Vec<ExtractedConcept>, OracleError> {
        if let Some(found) = self.fixtures.concepts.get(&sentences.join(" ")) {
            return Ok(found.clone());
        }
        Ok(sentences
            .iter()
            .position(|s| tokens(s).count() >= 5)
            .map(|i| ExtractedConcept {
                statement: sentences[i].clone(),
                sentence_index: Some(i),
            })
            .into_iter()
            .collect())
    }
}
