use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::{check_unit, ExtractedConcept, LlmVerdict, NliVerdict, Oracle, OracleError};
use crate::graph::PaperNode;

#[derive(Debug, Clone)]
enum Cached {
    Score(f64),
    Nli(NliVerdict),
    Verdict(LlmVerdict),
    Texts(Vec<String>),
    Text(String),
    Concepts(Vec<ExtractedConcept>),
}

/// Per-run wrapper around a backend.
///
/// Checks preconditions, validates every answer, memoizes on
/// `(operation, inputs)` and counts backend calls against an optional budget.
/// Cache hits are free.
pub struct OracleSession {
    backend: Arc<dyn Oracle>,
    budget: Option<u64>,
    calls: AtomicU64,
    requests: AtomicU64,
    cache: Mutex<HashMap<String, Cached>>,
}

impl std::fmt::Debug for OracleSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleSession")
            .field("budget", &self.budget)
            .field("calls", &self.calls())
            .finish()
    }
}

fn key(op: &str, parts: &[&str]) -> String {
    let mut k = String::from(op);
    for p in parts {
        k.push('\u{1f}');
        k.push_str(p);
    }
    k
}

fn require(op: &str, inputs: &[&str]) -> Result<(), OracleError> {
    if inputs.iter().any(|s| s.trim().is_empty()) {
        return Err(OracleError::InvalidInput(format!(
            "{op} needs non-empty inputs"
        )));
    }
    Ok(())
}

impl OracleSession {
    pub fn new(backend: Arc<dyn Oracle>, budget: Option<u64>) -> Self {
        Self {
            backend,
            budget,
            calls: AtomicU64::new(0),
            requests: AtomicU64::new(0),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn unbounded(backend: impl Oracle + 'static) -> Self {
        Self::new(Arc::new(backend), None)
    }

    /// Backend calls made so far (cache misses).
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    /// Every request, including cache hits.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    fn memo<F>(&self, k: String, compute: F) -> Result<Cached, OracleError>
    where
        F: FnOnce(&dyn Oracle) -> Result<Cached, OracleError>,
    {
        self.requests.fetch_add(1, Ordering::SeqCst);
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(hit.clone());
        }
        let used = self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(limit) = self.budget {
            if used >= limit {
                self.calls.fetch_sub(1, Ordering::SeqCst);
                return Err(OracleError::BudgetExceeded(limit));
            }
        }
        let value = compute(self.backend.as_ref())?;
        // First writer wins so concurrent callers observe one answer per key.
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.entry(k).or_insert(value).clone())
    }

    fn score<F>(&self, op: &str, k: String, compute: F) -> Result<f64, OracleError>
    where
        F: FnOnce(&dyn Oracle) -> Result<f64, OracleError>,
    {
        match self.memo(k, |o| {
            compute(o)
                .and_then(|v| check_unit(op, v))
                .map(Cached::Score)
        })? {
            Cached::Score(v) => Ok(v),
            _ => unreachable!("score key holds a score"),
        }
    }
}

fn path_key(path: &[PaperNode]) -> String {
    path.iter()
        .map(|p| p.id.as_str())
        .collect::<Vec<_>>()
        .join("\u{1e}")
}

impl Oracle for OracleSession {
    fn priority(&self, node_summary: &str, topic: &str) -> Result<f64, OracleError> {
        require("priority", &[node_summary, topic])?;
        self.score("priority", key("priority", &[node_summary, topic]), |o| {
            o.priority(node_summary, topic)
        })
    }

    fn importance(&self, paper: &PaperNode, topic: &str) -> Result<f64, OracleError> {
        require("importance", &[&paper.title, topic])?;
        self.score(
            "importance",
            key("importance", &[&paper.id, &paper.title, topic]),
            |o| o.importance(paper, topic),
        )
    }

    fn continuation(&self, path: &[PaperNode], candidate: &PaperNode) -> Result<f64, OracleError> {
        if path.is_empty() {
            return Err(OracleError::InvalidInput(
                "continuation needs a non-empty path".into(),
            ));
        }
        self.score(
            "continuation",
            key("continuation", &[&path_key(path), &candidate.id]),
            |o| o.continuation(path, candidate),
        )
    }

    fn similarity(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        require("similarity", &[a, b])?;
        let value = self.score("similarity", key("similarity", &[a, b]), |o| {
            o.similarity(a, b)
        })?;
        if a == b && value != 1.0 {
            return Err(OracleError::MalformedResponse(format!(
                "self-similarity {value} is not 1"
            )));
        }
        Ok(value)
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, OracleError> {
        require("nli", &[premise, hypothesis])?;
        let cached = self.memo(key("nli", &[premise, hypothesis]), |o| {
            let v = o.nli(premise, hypothesis)?;
            check_unit("nli probability", v.probability)?;
            Ok(Cached::Nli(v))
        })?;
        match cached {
            Cached::Nli(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn verify(
        &self,
        claim: &str,
        evidence: &str,
        context: &str,
    ) -> Result<LlmVerdict, OracleError> {
        require("verify", &[claim, evidence])?;
        let cached = self.memo(key("verify", &[claim, evidence, context]), |o| {
            let v = o.verify(claim, evidence, context)?;
            check_unit("verify", v.score)?;
            Ok(Cached::Verdict(v))
        })?;
        match cached {
            Cached::Verdict(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn propose(
        &self,
        path: &[PaperNode],
        topic: &str,
        hints: &[String],
        k: usize,
    ) -> Result<Vec<String>, OracleError> {
        if path.is_empty() || k == 0 {
            return Err(OracleError::InvalidInput(
                "propose needs a path and k >= 1".into(),
            ));
        }
        let k_text = k.to_string();
        let hint_key = hints.join("\u{1e}");
        let cached = self.memo(
            key("propose", &[&path_key(path), topic, &hint_key, &k_text]),
            |o| {
                let found = o.propose(path, topic, hints, k)?;
                if found.iter().any(|s| s.trim().is_empty()) {
                    return Err(OracleError::MalformedResponse("empty proposal".into()));
                }
                Ok(Cached::Texts(found))
            },
        )?;
        match cached {
            Cached::Texts(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn summarize(&self, statement: &str, max_chars: usize) -> Result<String, OracleError> {
        require("summarize", &[statement])?;
        let cap = max_chars.to_string();
        let cached = self.memo(key("summarize", &[statement, &cap]), |o| {
            o.summarize(statement, max_chars).map(Cached::Text)
        })?;
        match cached {
            Cached::Text(v) => Ok(v),
            _ => unreachable!(),
        }
    }

    fn concepts(&self, sentences: &[String]) -> Result<Vec<ExtractedConcept>, OracleError> {
        let cached = self.memo(key("concepts", &[&sentences.join("\u{1e}")]), |o| {
            let found = o.concepts(sentences)?;
            if found
                .iter()
                .any(|c| c.sentence_index.is_some_and(|i| i >= sentences.len()))
            {
                return Err(OracleError::MalformedResponse(
                    "concept sentence index out of range".into(),
                ));
            }
            Ok(Cached::Concepts(found))
        })?;
        match cached {
            Cached::Concepts(v) => Ok(v),
            _ => unreachable!(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Fixtures, MockOracle};

    #[test]
    fn memoizes_and_counts() {
        let session = OracleSession::unbounded(MockOracle::new(1));
        let a = session.priority("x", "t").unwrap();
        let b = session.priority("x", "t").unwrap();
        assert_eq!(a, b);
        assert_eq!(session.calls(), 1);
        assert_eq!(session.requests(), 2);
    }

    #[test]
    fn budget_exceeded() {
        let session = OracleSession::new(Arc::new(MockOracle::new(1)), Some(2));
        session.priority("a", "t").unwrap();
        session.priority("b", "t").unwrap();
        session.priority("a", "t").unwrap();
        assert_eq!(
            session.priority("c", "t"),
            Err(OracleError::BudgetExceeded(2))
        );
    }

    #[test]
    fn rejects_empty_inputs() {
        let session = OracleSession::unbounded(MockOracle::new(1));
        assert!(matches!(
            session.priority("", "t"),
            Err(OracleError::InvalidInput(_))
        ));
        assert!(matches!(
            session.similarity("a", " "),
            Err(OracleError::InvalidInput(_))
        ));
    }

    #[test]
    fn out_of_range_fixture_surfaces_as_malformed() {
        let mut fixtures = Fixtures::default();
        fixtures.priority.insert("weird".into(), 1.4);
        let session = OracleSession::unbounded(MockOracle::with_fixtures(0, fixtures));
        assert!(matches!(
            session.priority("weird", "t"),
            Err(OracleError::MalformedResponse(_))
        ));
    }
}
