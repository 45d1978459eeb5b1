use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;

use super::{check_unit, ExtractedConcept, LinkKind, LlmVerdict, NliVerdict, Oracle, OracleError};
use crate::graph::{NliLabel, PaperNode};

/// Client for an oracle service.
///
/// Each call is `POST endpoint` with body `{"op": ..., "inputs": {...}}`.
/// Replies are `{"score"}`, `{"label","probability"}`, `{"score","kind"}`,
/// `{"statements"}`, `{"summary"}` or `{"concepts"}` depending on the op.
/// Transport failures and timeouts map to [`OracleError::Unavailable`];
/// replies that break the contract map to [`OracleError::MalformedResponse`].
#[derive(Debug, Clone)]
pub struct RemoteOracle {
    endpoint: String,
    agent: Agent,
}

impl RemoteOracle {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    fn call(&self, op: &str, inputs: Value) -> Result<Value, OracleError> {
        let body = json!({ "op": op, "inputs": inputs });
        let mut response = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| OracleError::Unavailable(format!("{op}: {e}")))?;
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| OracleError::MalformedResponse(format!("{op}: {e}")))
    }

    fn score(&self, op: &str, inputs: Value) -> Result<f64, OracleError> {
        let reply = self.call(op, inputs)?;
        let score = field_f64(&reply, op, "score")?;
        check_unit(op, score)
    }
}

fn field_f64(reply: &Value, op: &str, name: &str) -> Result<f64, OracleError> {
    reply
        .get(name)
        .and_then(Value::as_f64)
        .ok_or_else(|| OracleError::MalformedResponse(format!("{op}: missing numeric `{name}`")))
}

fn field_enum<T: serde::de::DeserializeOwned>(
    reply: &Value,
    op: &str,
    name: &str,
) -> Result<T, OracleError> {
    let raw = reply
        .get(name)
        .ok_or_else(|| OracleError::MalformedResponse(format!("{op}: missing `{name}`")))?;
    serde_json::from_value(raw.clone())
        .map_err(|e| OracleError::MalformedResponse(format!("{op}: bad `{name}`: {e}")))
}

fn paper_json(p: &PaperNode) -> Value {
    json!({
        "id": p.id,
        "title": p.title,
        "abstract": p.abstract_text,
        "year": p.year,
    })
}

impl Oracle for RemoteOracle {
    fn priority(&self, node_summary: &str, topic: &str) -> Result<f64, OracleError> {
        self.score(
            "priority",
            json!({ "node_summary": node_summary, "topic": topic }),
        )
    }

    fn importance(&self, paper: &PaperNode, topic: &str) -> Result<f64, OracleError> {
        self.score(
            "importance",
            json!({ "paper": paper_json(paper), "topic": topic }),
        )
    }

    fn continuation(&self, path: &[PaperNode], candidate: &PaperNode) -> Result<f64, OracleError> {
        let path: Vec<Value> = path.iter().map(paper_json).collect();
        self.score(
            "continuation",
            json!({ "path": path, "candidate": paper_json(candidate) }),
        )
    }

    /// Both argument orders are queried; an asymmetric answer is malformed.
    fn similarity(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        let forward = self.score("similarity", json!({ "text_a": a, "text_b": b }))?;
        if a == b {
            if forward != 1.0 {
                return Err(OracleError::MalformedResponse(format!(
                    "similarity: self-similarity {forward} is not 1"
                )));
            }
            return Ok(forward);
        }
        let backward = self.score("similarity", json!({ "text_a": b, "text_b": a }))?;
        if (forward - backward).abs() > 1e-12 {
            return Err(OracleError::MalformedResponse(format!(
                "similarity: asymmetric answers {forward} and {backward}"
            )));
        }
        Ok(forward)
    }

    fn nli(&self, premise: &str, hypothesis: &str) -> Result<NliVerdict, OracleError> {
        let reply = self.call(
            "nli",
            json!({ "premise": premise, "hypothesis": hypothesis }),
        )?;
        let label: NliLabel = field_enum(&reply, "nli", "label")?;
        let probability = check_unit("nli", field_f64(&reply, "nli", "probability")?)?;
        Ok(NliVerdict { label, probability })
    }

    fn verify(
        &self,
        claim: &str,
        evidence: &str,
        context: &str,
    ) -> Result<LlmVerdict, OracleError> {
        let reply = self.call(
            "verify",
            json!({ "claim": claim, "evidence": evidence, "context": context }),
        )?;
        let score = check_unit("verify", field_f64(&reply, "verify", "score")?)?;
        let kind: LinkKind = field_enum(&reply, "verify", "kind")?;
        Ok(LlmVerdict { score, kind })
    }

    fn propose(
        &self,
        path: &[PaperNode],
        topic: &str,
        hints: &[String],
        k: usize,
    ) -> Result<Vec<String>, OracleError> {
        let path: Vec<Value> = path.iter().map(paper_json).collect();
        let reply = self.call(
            "think",
            json!({ "path": path, "topic": topic, "hints": hints, "k": k }),
        )?;
        let statements: Vec<String> = field_enum(&reply, "think", "statements")?;
        Ok(statements.into_iter().take(k).collect())
    }

    fn summarize(&self, statement: &str, max_chars: usize) -> Result<String, OracleError> {
        let reply = self.call(
            "summarize",
            json!({ "statement": statement, "max_chars": max_chars }),
        )?;
        field_enum(&reply, "summarize", "summary")
    }

    fn concepts(&self, sentences: &[String]) -> Result<Vec<ExtractedConcept>, OracleError> {
        let reply = self.call("concepts", json!({ "sentences": sentences }))?;
        field_enum(&reply, "concepts", "concepts")
    }
}
