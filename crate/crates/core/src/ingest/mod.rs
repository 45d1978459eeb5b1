//! Survey documents in, structured corpus out: reference parsing,
//! segmentation, sentence-citation pairing and concept extraction.

pub mod markers;
pub mod references;
pub mod segment;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::corpus::{ConceptNode, Corpus, SentenceCitationPair, SurveyDoc};
use crate::oracle::{Oracle, OracleError};
use crate::text::tokens;
use markers::{find_markers, strip_markers, MarkerTarget};
use references::{first_author_surname, parse_reference, ParsedReference, Style};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A non-fatal problem found while ingesting, tied to a survey location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub survey_id: String,
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.survey_id, self.location, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub style: Style,
    /// Sentences shorter than this after marker stripping are dropped.
    pub min_tokens: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            style: Style::Auto,
            min_tokens: 5,
        }
    }
}

static REFERENCES_HEADING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:#+\s*)?(?:\d+\.?\s*)?(references|bibliography)\s*:?\s*$")
        .expect("valid regex")
});

/// Splits a survey file into its body and its reference block. Without a
/// references heading the whole text is body.
pub fn split_body_references(text: &str) -> (&str, &str) {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if REFERENCES_HEADING.is_match(line.trim_end()) {
            return (&text[..offset], &text[offset + line.len()..]);
        }
        offset += line.len();
    }
    (text, "")
}

/// Segments a survey file into a [`SurveyDoc`].
pub fn segment_survey(id: &str, text: &str) -> SurveyDoc {
    let (body, refs) = split_body_references(text);
    let title = body
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .unwrap_or_else(|| id.to_string());
    let paragraphs = segment::split_paragraphs(body);
    let sentences = paragraphs
        .iter()
        .map(|p| segment::split_sentences(p))
        .collect();
    SurveyDoc {
        id: id.to_string(),
        title,
        paragraphs,
        sentences,
        references: references::split_entries(refs),
    }
}

/// Lookup from citation markers to parsed references.
struct ReferenceIndex {
    entries: Vec<ParsedReference>,
}

impl ReferenceIndex {
    fn new(survey: &SurveyDoc, style: Style, diagnostics: &mut Vec<Diagnostic>) -> Self {
        let mut entries = Vec::new();
        for (position, raw) in survey.references.iter().enumerate() {
            match parse_reference(raw, style, position) {
                Ok(entry) => entries.push(entry),
                Err(d) => diagnostics.push(Diagnostic {
                    survey_id: survey.id.clone(),
                    location: format!("reference {}", position + 1),
                    message: d.reason,
                }),
            }
        }
        Self { entries }
    }

    /// A numeric marker resolves by `[n]` label, or by list position when
    /// the list is unlabelled.
    fn by_number(&self, n: usize) -> Option<&str> {
        let labelled = self.entries.iter().any(|e| e.label.is_some());
        self.entries
            .iter()
            .find(|e| {
                if labelled {
                    e.label == Some(n)
                } else {
                    e.position + 1 == n
                }
            })
            .map(|e| e.paper.id.as_str())
    }

    fn by_author_year(&self, surname: &str, year: i32) -> Option<&str> {
        let wanted = surname.to_lowercase();
        self.entries
            .iter()
            .find(|e| {
                e.paper.year == year
                    && first_author_surname(e).is_some_and(|s| s.to_lowercase() == wanted)
            })
            .map(|e| e.paper.id.as_str())
    }
}

/// Words that carry no content once the markers are gone, as in
/// "See [1], [2]." or "E.g. [4]".
const CUE_WORDS: &[&str] = &[
    "see",
    "also",
    "e",
    "g",
    "eg",
    "cf",
    "and",
    "for",
    "example",
    "details",
    "refs",
    "references",
];

fn is_citation_list(stripped: &str) -> bool {
    tokens(stripped).all(|t| CUE_WORDS.contains(&t.as_str()))
}

/// Pairs of sentences with the papers they cite, plus diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paired {
    pub pairs: Vec<SentenceCitationPair>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Links every citing sentence to the resolved paper ids of its markers.
/// Marker text is stripped from the stored sentence. Sentences that are
/// too short after stripping, or whose markers all fail to resolve, are
/// dropped with a diagnostic.
pub fn pair_sentences_citations(survey: &SurveyDoc, options: IngestOptions) -> Paired {
    let mut out = Paired::default();
    let index = ReferenceIndex::new(survey, options.style, &mut out.diagnostics);
    for (p, sentences) in survey.sentences.iter().enumerate() {
        for (s, sentence) in sentences.iter().enumerate() {
            let found = find_markers(sentence);
            if found.is_empty() {
                continue;
            }
            let diag = |message: String| Diagnostic {
                survey_id: survey.id.clone(),
                location: format!("paragraph {p} sentence {s}"),
                message,
            };
            let mut cited: Vec<String> = Vec::new();
            for marker in &found {
                match &marker.target {
                    MarkerTarget::Numbers(ns) => {
                        for &n in ns {
                            match index.by_number(n) {
                                Some(id) => cited.push(id.to_string()),
                                None => out
                                    .diagnostics
                                    .push(diag(format!("unresolved marker [{n}]"))),
                            }
                        }
                    }
                    MarkerTarget::AuthorYear(list) => {
                        for (name, year) in list {
                            match index.by_author_year(name, *year) {
                                Some(id) => cited.push(id.to_string()),
                                None => out
                                    .diagnostics
                                    .push(diag(format!("unresolved marker ({name}, {year})"))),
                            }
                        }
                    }
                }
            }
            let mut seen = std::collections::HashSet::new();
            cited.retain(|id| seen.insert(id.clone()));
            if cited.is_empty() {
                continue;
            }
            let text = strip_markers(sentence, &found);
            if is_citation_list(&text) {
                out.diagnostics
                    .push(diag("pure citation list dropped".into()));
                continue;
            }
            let n_tokens = tokens(&text).count();
            if n_tokens < options.min_tokens {
                out.diagnostics
                    .push(diag(format!("sentence of {n_tokens} tokens dropped")));
                continue;
            }
            out.pairs.push(SentenceCitationPair {
                survey_id: survey.id.clone(),
                paragraph_index: p,
                sentence_index: s,
                sentence_text: text,
                cited_paper_ids: cited,
            });
        }
    }
    out
}

/// Asks the oracle for concept statements paragraph by paragraph. A concept
/// traced to a citing sentence inherits that sentence's paper ids.
pub fn extract_concepts(
    survey: &SurveyDoc,
    pairs: &[SentenceCitationPair],
    oracle: &dyn Oracle,
) -> Result<Vec<ConceptNode>, OracleError> {
    let links: HashMap<(usize, usize), &Vec<String>> = pairs
        .iter()
        .filter(|p| p.survey_id == survey.id)
        .map(|p| ((p.paragraph_index, p.sentence_index), &p.cited_paper_ids))
        .collect();
    let mut concepts = Vec::new();
    for (p, sentences) in survey.sentences.iter().enumerate() {
        if sentences.is_empty() {
            continue;
        }
        let found = oracle.concepts(sentences)?;
        for (k, concept) in found.into_iter().enumerate() {
            let statement = concept.statement.trim();
            if statement.is_empty() {
                continue;
            }
            let linked = concept
                .sentence_index
                .and_then(|s| links.get(&(p, s)))
                .map(|ids| (*ids).clone())
                .unwrap_or_default();
            concepts.push(ConceptNode {
                id: format!("{}:{p}:{k}", survey.id),
                statement: strip_markers(statement, &find_markers(statement)),
                survey_id: survey.id.clone(),
                paragraph_index: p,
                linked_paper_ids: linked,
            });
        }
    }
    Ok(concepts)
}

/// Full pipeline over one survey text. Returns the survey, its papers, the
/// pairs and concepts.
pub fn ingest_survey(
    id: &str,
    text: &str,
    oracle: &dyn Oracle,
    options: IngestOptions,
) -> Result<(Corpus, Vec<Diagnostic>), IngestError> {
    let survey = segment_survey(id, text);
    let paired = pair_sentences_citations(&survey, options);
    let concepts = extract_concepts(&survey, &paired.pairs, oracle)?;
    let mut corpus = Corpus::default();
    for (position, raw) in survey.references.iter().enumerate() {
        if let Ok(entry) = parse_reference(raw, options.style, position) {
            corpus
                .papers
                .entry(entry.paper.id.clone())
                .or_insert(entry.paper);
        }
    }
    corpus.pairs = paired.pairs;
    corpus.concepts = concepts;
    corpus.surveys.push(survey);
    Ok((corpus, paired.diagnostics))
}

fn survey_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned())
}

/// Ingests every file and merges the results in survey-id order. Papers
/// with the same normalized title and year collapse into one node; the
/// first survey to mention a paper supplies its metadata.
pub fn build_corpus(
    files: &[PathBuf],
    oracle: &dyn Oracle,
    options: IngestOptions,
) -> Result<(Corpus, Vec<Diagnostic>), IngestError> {
    let mut texts: BTreeMap<String, String> = BTreeMap::new();
    for path in files {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::UnreadableFile {
            path: path.clone(),
            source,
        })?;
        texts.insert(survey_id(path), text);
    }
    let mut corpus = Corpus::default();
    let mut diagnostics = Vec::new();
    for (id, text) in &texts {
        let (part, diags) = ingest_survey(id, text, oracle, options)?;
        for (pid, paper) in part.papers {
            corpus.papers.entry(pid).or_insert(paper);
        }
        corpus.surveys.extend(part.surveys);
        corpus.pairs.extend(part.pairs);
        corpus.concepts.extend(part.concepts);
        diagnostics.extend(diags);
    }
    Ok((corpus, diagnostics))
}

/// Survey files in a directory: `.txt` and `.md`, sorted by path.
pub fn survey_files(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let unreadable = |source| IngestError::UnreadableFile {
        path: dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(unreadable)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|e| e == "txt" || e == "md" || e == "markdown")
        })
        .collect();
    files.sort();
    Ok(files)
}
