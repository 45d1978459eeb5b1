//! The ingested corpus: surveys, cited papers, concept nodes and
//! sentence-citation pairs, plus its JSONL file format.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::PaperNode;
use crate::ingest::segment::split_sentences;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyDoc {
    pub id: String,
    pub title: String,
    pub paragraphs: Vec<String>,
    pub sentences: Vec<Vec<String>>,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceCitationPair {
    pub survey_id: String,
    pub paragraph_index: usize,
    pub sentence_index: usize,
    pub sentence_text: String,
    pub cited_paper_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptNode {
    pub id: String,
    pub statement: String,
    pub survey_id: String,
    pub paragraph_index: usize,
    pub linked_paper_ids: Vec<String>,
}

/// A directed citation between two corpus papers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Citation {
    pub source: String,
    pub target: String,
}

/// A retrievable document: passages in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub id: String,
    pub passages: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub surveys: Vec<SurveyDoc>,
    pub papers: BTreeMap<String, PaperNode>,
    pub concepts: Vec<ConceptNode>,
    pub pairs: Vec<SentenceCitationPair>,
    pub citations: Vec<Citation>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Record {
    SurveyMeta(SurveyDoc),
    Paper(PaperNode),
    Citation(Citation),
    Pair(SentenceCitationPair),
    Concept(ConceptNode),
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper(&self, id: &str) -> Option<&PaperNode> {
        self.papers.get(id)
    }

    pub fn survey(&self, id: &str) -> Option<&SurveyDoc> {
        self.surveys.iter().find(|s| s.id == id)
    }

    /// Builds a corpus from papers alone.
    pub fn from_papers(papers: impl IntoIterator<Item = PaperNode>) -> Self {
        Self {
            papers: papers.into_iter().map(|p| (p.id.clone(), p)).collect(),
            ..Self::default()
        }
    }

    /// The document behind a paper id: its abstract sentences followed by
    /// every survey sentence citing it. Falls back to the title alone.
    pub fn document(&self, id: &str) -> Option<Document> {
        let paper = self.papers.get(id)?;
        let mut passages = split_sentences(&paper.abstract_text);
        passages.extend(
            self.pairs
                .iter()
                .filter(|p| p.cited_paper_ids.iter().any(|c| c == id))
                .map(|p| p.sentence_text.clone()),
        );
        if passages.is_empty() {
            passages.push(paper.title.clone());
        }
        Some(Document {
            id: id.to_string(),
            passages,
        })
    }

    /// Concepts extracted from one paragraph.
    pub fn concepts_in(&self, survey_id: &str, paragraph_index: usize) -> Vec<&ConceptNode> {
        self.concepts
            .iter()
            .filter(|c| c.survey_id == survey_id && c.paragraph_index == paragraph_index)
            .collect()
    }

    /// Source paragraph text of a concept.
    pub fn paragraph_of(&self, concept: &ConceptNode) -> Option<&str> {
        self.survey(&concept.survey_id)?
            .paragraphs
            .get(concept.paragraph_index)
            .map(String::as_str)
    }

    /// Every dangling reference, as human-readable messages.
    pub fn integrity_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let known_surveys: BTreeSet<&str> = self.surveys.iter().map(|s| s.id.as_str()).collect();
        for s in &self.surveys {
            if s.sentences.len() != s.paragraphs.len() {
                errors.push(format!(
                    "survey {}: sentence lists do not match paragraphs",
                    s.id
                ));
            }
        }
        for (i, pair) in self.pairs.iter().enumerate() {
            if pair.cited_paper_ids.is_empty() {
                errors.push(format!("pair {i}: no cited papers"));
            }
            for id in &pair.cited_paper_ids {
                if !self.papers.contains_key(id) {
                    errors.push(format!("pair {i}: unknown paper {id}"));
                }
            }
            let resolved = self
                .survey(&pair.survey_id)
                .and_then(|s| s.sentences.get(pair.paragraph_index))
                .and_then(|p| p.get(pair.sentence_index));
            if resolved.is_none() {
                errors.push(format!("pair {i}: sentence position does not resolve"));
            }
        }
        for concept in &self.concepts {
            if concept.statement.trim().is_empty() {
                errors.push(format!("concept {}: empty statement", concept.id));
            }
            if !known_surveys.contains(concept.survey_id.as_str())
                || self.paragraph_of(concept).is_none()
            {
                errors.push(format!(
                    "concept {}: paragraph does not resolve",
                    concept.id
                ));
            }
            for id in &concept.linked_paper_ids {
                if !self.papers.contains_key(id) {
                    errors.push(format!("concept {}: unknown paper {id}", concept.id));
                }
            }
        }
        for c in &self.citations {
            for id in [&c.source, &c.target] {
                if !self.papers.contains_key(id) {
                    errors.push(format!(
                        "citation {} -> {}: unknown paper {id}",
                        c.source, c.target
                    ));
                }
            }
        }
        errors
    }

    /// Writes one record per line: surveys, papers, citations, pairs, then
    /// concepts. Output is byte-stable for equal corpora.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut surveys: Vec<&SurveyDoc> = self.surveys.iter().collect();
        surveys.sort_by(|a, b| a.id.cmp(&b.id));
        let mut citations = self.citations.clone();
        citations.sort();
        let records = surveys
            .into_iter()
            .cloned()
            .map(Record::SurveyMeta)
            .chain(self.papers.values().cloned().map(Record::Paper))
            .chain(citations.into_iter().map(Record::Citation))
            .chain(self.pairs.iter().cloned().map(Record::Pair))
            .chain(self.concepts.iter().cloned().map(Record::Concept));
        for record in records {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match record {
                Record::SurveyMeta(s) => corpus.surveys.push(s),
                Record::Paper(p) => {
                    corpus.papers.insert(p.id.clone(), p);
                }
                Record::Citation(c) => corpus.citations.push(c),
                Record::Pair(p) => corpus.pairs.push(p),
                Record::Concept(c) => corpus.concepts.push(c),
            }
        }
        Ok(corpus)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CorpusError> {
        Self::read_jsonl(text.as_bytes())
    }
}
