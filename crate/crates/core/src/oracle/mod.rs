//! The semantic-judgment boundary.
//!
//! Every LLM, NLI or embedding call goes through the [`Oracle`] trait. Two
//! backends ship: [`MockOracle`] (fixture tables with a seeded-hash fallback)
//! and, behind the `remote` feature, [`RemoteOracle`] speaking a small JSON
//! protocol. Callers normally wrap a backend in an [`OracleSession`], which
//! checks preconditions, rejects out-of-range answers, memoizes, and enforces
//! a call budget.

mod mock;
#[cfg(feature = "remote")]
mod remote;
mod session;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NliLabel, PaperNode};

pub use mock::{ContinuationFixture, Fixtures, MockOracle, NliFixture, PairFixture, VerifyFixture};
#[cfg(feature = "remote")]
pub use remote::RemoteOracle;
pub use session::OracleSession;

pub const ENV_URL: &str = "EVOTREE_ORACLE_URL";
pub const ENV_TIMEOUT_MS: &str = "EVOTREE_ORACLE_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("oracle unavailable: {0}")]
    Unavailable(String),
    #[error("malformed oracle response: {0}")]
    MalformedResponse(String),
    #[error("invalid oracle input: {0}")]
    InvalidInput(String),
    #[error("oracle call budget of {0} exhausted")]
    BudgetExceeded(u64),
    #[error("invalid oracle configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliVerdict {
    pub label: NliLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    DirectCitation,
    Paraphrase,
    NoConnection,
}

/// Result of the LLM verifier consulted on ambiguous NLI verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlmVerdict {
    pub score: f64,
    pub kind: LinkKind,
}

/// A concept statement extracted from a paragraph, with the index of the
/// sentence it came from when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedConcept {
    pub statement: String,
    pub sentence_index: Option<usize>,
}

/// Semantic judgments used throughout construction, retrospection and
/// validation. Implementations must be callable from several threads.
pub trait Oracle: Send + Sync {
    /// LLM priority of a node for the topic, in [0, 1].
    fn priority(&self, node_summary: &str, topic: &str) -> Result<f64, OracleError>;

    /// S_LLM: the paper's importance within the topic, in [0, 1].
    fn importance(&self, paper: &PaperNode, topic: &str) -> Result<f64, OracleError>;

    /// How well `candidate` continues `path`, in [0, 1].
    fn continuation(&self, path: &[PaperNode], candidate: &PaperNode) -> Result<f64, OracleError>;

    /// Symmetric semantic similarity with `similarity(a, a) == 1`.
    fn similarity(&self, a: &str, b: &str) -> Result<f64, OracleError>;

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, OracleError>;

    fn verify(&self, claim: &str, evidence: &str, context: &str)
        -> Result<LlmVerdict, OracleError>;

    /// Proposes up to `k` statements for advancements that could follow
    /// `path`. `hints` are domain-knowledge snippets the caller offers.
    fn propose(
        &self,
        path: &[PaperNode],
        topic: &str,
        hints: &[String],
        k: usize,
    ) -> Result<Vec<String>, OracleError>;

    /// Condenses a statement to at most `max_chars` characters. Callers
    /// still enforce the cap.
    fn summarize(&self, statement: &str, max_chars: usize) -> Result<String, OracleError>;

    /// Concept statements for one paragraph, given as its sentences.
    fn concepts(&self, sentences: &[String]) -> Result<Vec<ExtractedConcept>, OracleError>;
}

impl<T: Oracle + ?Sized> Oracle for Arc<T> {
    fn priority(&self, node_summary: &str, topic: &str) -> Result<f64, OracleError> {
        (**self).priority(node_summary, topic)
    }
    fn importance(&self, paper: &PaperNode, topic: &str) -> Result<f64, OracleError> {
        (**self).importance(paper, topic)
    }
    fn continuation(&self, path: &[PaperNode], candidate: &PaperNode) -> Result<f64, OracleError> {
        (**self).continuation(path, candidate)
    }
    fn similarity(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        (**self).similarity(a, b)
    }
    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, OracleError> {
        (**self).nli(premise, hypothesis)
    }
    fn verify(
        &self,
        claim: &str,
        evidence: &str,
        context: &str,
    ) -> Result<LlmVerdict, OracleError> {
        (**self).verify(claim, evidence, context)
    }
    fn propose(
        &self,
        path: &[PaperNode],
        topic: &str,
        hints: &[String],
        k: usize,
    ) -> Result<Vec<String>, OracleError> {
        (**self).propose(path, topic, hints, k)
    }
    fn summarize(&self, statement: &str, max_chars: usize) -> Result<String, OracleError> {
        (**self).summarize(statement, max_chars)
    }
    fn concepts(&self, sentences: &[String]) -> Result<Vec<ExtractedConcept>, OracleError> {
        (**self).concepts(sentences)
    }
}

/// Rejects non-finite or out-of-range scores instead of clamping them.
pub(crate) fn check_unit(what: &str, value: f64) -> Result<f64, OracleError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(OracleError::MalformedResponse(format!(
            "{what} score {value} outside [0, 1]"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub timeout_ms: u64,
    pub seed: Option<u64>,
    /// Maximum number of uncached backend calls per run.
    pub budget: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Mock,
            endpoint: None,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            seed: Some(0),
            budget: None,
        }
    }
}

impl OracleConfig {
    pub fn mock(seed: u64) -> Self {
        Self {
            seed: Some(seed),
            ..Self::default()
        }
    }

    /// Fills the endpoint and timeout from `EVOTREE_ORACLE_URL` and
    /// `EVOTREE_ORACLE_TIMEOUT_MS` where they are not already set.
    pub fn with_env(mut self) -> Result<Self, OracleError> {
        if self.endpoint.is_none() {
            self.endpoint = std::env::var(ENV_URL).ok().filter(|s| !s.is_empty());
        }
        if let Ok(raw) = std::env::var(ENV_TIMEOUT_MS) {
            self.timeout_ms = raw.trim().parse().map_err(|_| {
                OracleError::Config(format!("{ENV_TIMEOUT_MS}={raw} is not an integer"))
            })?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        match self.backend {
            Backend::Mock if self.seed.is_none() => {
                Err(OracleError::Config("mock backend needs a seed".into()))
            }
            Backend::Remote if self.endpoint.is_none() => Err(OracleError::Config(format!(
                "remote backend needs an endpoint (set {ENV_URL})"
            ))),
            _ => Ok(()),
        }
    }

    /// Builds the configured backend wrapped in a session. `fixtures` only
    /// applies to the mock backend.
    pub fn build(&self, fixtures: Fixtures) -> Result<OracleSession, OracleError> {
        self.validate()?;
        let backend: Arc<dyn Oracle> = match self.backend {
            Backend::Mock => Arc::new(MockOracle::with_fixtures(
                self.seed.expect("validated"),
                fixtures,
            )),
            Backend::Remote => self.remote()?,
        };
        Ok(OracleSession::new(backend, self.budget))
    }

    #[cfg(feature = "remote")]
    fn remote(&self) -> Result<Arc<dyn Oracle>, OracleError> {
        let endpoint = self.endpoint.clone().expect("validated");
        Ok(Arc::new(RemoteOracle::new(
            endpoint,
            std::time::Duration::from_millis(self.timeout_ms),
        )))
    }

    #[cfg(not(feature = "remote"))]
    fn remote(&self) -> Result<Arc<dyn Oracle>, OracleError> {
        Err(OracleError::Config(
            "built without the `remote` feature".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_requirements() {
        assert!(OracleConfig::mock(3).validate().is_ok());
        let no_seed = OracleConfig {
            seed: None,
            ..OracleConfig::default()
        };
        assert!(matches!(no_seed.validate(), Err(OracleError::Config(_))));
        let remote = OracleConfig {
            backend: Backend::Remote,
            endpoint: None,
            ..OracleConfig::default()
        };
        assert!(matches!(remote.validate(), Err(OracleError::Config(_))));
    }

    #[test]
    fn check_unit_rejects_out_of_range() {
        assert_eq!(check_unit("x", 0.25), Ok(0.25));
        assert!(check_unit("x", 1.5).is_err());
        assert!(check_unit("x", f64::NAN).is_err());
    }
}
