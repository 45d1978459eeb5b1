//! Reference-list parsing for IEEE and APA styles.
//!
//! Title and year are required; authors and venue are best effort. Entries
//! that cannot be parsed come back as diagnostics, never silently dropped.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{PaperNode, DEFAULT_HORIZON, YEAR_FLOOR};
use crate::text::normalize_title;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Style {
    Ieee,
    Apa,
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReference {
    /// The `[n]` label for IEEE entries.
    pub label: Option<usize>,
    /// 0-based position in the reference list.
    pub position: usize,
    pub style: Style,
    pub paper: PaperNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDiagnostic {
    pub position: usize,
    pub raw: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedReferences {
    pub entries: Vec<ParsedReference>,
    pub diagnostics: Vec<ReferenceDiagnostic>,
}

static LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\[(\d+)\]\s*").expect("valid regex"));
static YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(1[89]\d{2}|20\d{2})[a-z]?\b").expect("valid regex"));
static APA_YEAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\((\d{4})[a-z]?(?:,[^)]*)?\)\.?|\((n\.d\.|in press)\)\.?").expect("valid regex")
});
static IEEE_AUTHOR: LazyLock<Regex> = LazyLock::new(|| {
    let name = r"(?:\p{Lu}[\p{Ll}]?\.(?:\s?-?\p{Lu}[\p{Ll}]?\.)*\s+)+(?:(?:van|von|der|den|de|da|di|le|la)\s+)*\p{Lu}[\p{L}'’\-]+(?:\s+Jr\.)?";
    Regex::new(&format!(
        r"^(?:and\s+)?{name}(?:\s+et\s+al\.)?(?:\s+and\s+{name})?$"
    ))
    .expect("valid regex")
});
static VENUE_STOP: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r",\s*(?:vol\.|no\.|pp\.|Art\.|(?:Jan|Feb|Mar|Apr|May|Jun|Jul|Aug|Sep|Oct|Nov|Dec)[a-z]*\.?\s|(?:1[89]|20)\d{2}\b)")
        .expect("valid regex")
});
static IEEE_EDITION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r",?\s*\d+(?:st|nd|rd|th)\s+ed$").expect("valid regex"));
static APA_EDITION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\s*\((?:\d+(?:st|nd|rd|th)|Rev\.)\s+ed\.(?:,[^)]*)?\)").expect("valid regex")
});
static SENTENCE_END: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[.?!](?:\s+|$)").expect("valid regex"));
static INITIALS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:(?:\p{Lu}\.(?:-\p{Lu}\.)?|de|van|von|der|den|da)\s?)+$").expect("valid regex")
});

/// Stable id for a paper: hash of normalized title and year.
pub fn paper_id(title: &str, year: i32) -> String {
    let digest = Sha256::digest(format!("{}|{year}", normalize_title(title)).as_bytes());
    let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
    format!("p{hex}")
}

/// Splits a reference block into raw entries. A line starting with `[n]`
/// opens an entry; otherwise every non-indented, non-blank line does.
/// Indented lines continue the previous entry.
pub fn split_entries(block: &str) -> Vec<String> {
    let labelled = block.lines().any(|l| LABEL.is_match(l));
    let mut entries: Vec<String> = Vec::new();
    let mut open = false;
    for line in block.lines() {
        if line.trim().is_empty() {
            open = false;
            continue;
        }
        let starts = if labelled {
            LABEL.is_match(line)
        } else {
            !line.starts_with([' ', '\t']) || !open
        };
        if starts || entries.is_empty() {
            entries.push(line.trim().to_string());
            open = true;
        } else {
            let last = entries.last_mut().expect("non-empty");
            last.push(' ');
            last.push_str(line.trim());
        }
    }
    entries
}

pub fn detect_style(entry: &str) -> Style {
    if LABEL.is_match(entry) {
        return Style::Ieee;
    }
    let quote = entry.find(['"', '“']);
    match (APA_YEAR.find(entry), quote) {
        (Some(y), Some(q)) if y.start() < q => Style::Apa,
        (Some(_), None) => Style::Apa,
        _ => Style::Ieee,
    }
}

fn clean_title(title: &str) -> String {
    title
        .trim()
        .trim_end_matches([',', '.', ';', ' '])
        .trim()
        .to_string()
}

fn check_year(year: i32) -> Result<i32, String> {
    if (YEAR_FLOOR..=DEFAULT_HORIZON).contains(&year) {
        Ok(year)
    } else {
        Err(format!("year {year} out of range"))
    }
}

struct Fields {
    title: String,
    year: i32,
    authors: Vec<String>,
    venue: Option<String>,
}

fn venue_from(tail: &str) -> Option<String> {
    let tail = tail.trim_start_matches([',', '.', ' ']);
    let tail = tail
        .strip_prefix("in ")
        .or_else(|| tail.strip_prefix("In "))
        .unwrap_or(tail);
    let end = VENUE_STOP.find(tail).map_or(tail.len(), |m| m.start());
    let venue = tail[..end].trim().trim_end_matches(['.', ',']).trim();
    (!venue.is_empty() && venue.chars().any(char::is_alphabetic)).then(|| venue.to_string())
}

fn split_ieee_authors(text: &str) -> Vec<String> {
    text.split(',')
        .flat_map(|part| part.split(" and "))
        .map(|a| a.trim().trim_start_matches("and ").trim())
        .map(|a| a.trim_end_matches(" et al.").trim().to_string())
        .filter(|a| !a.is_empty())
        .collect()
}

/// The last year-like number in the tail, skipping page ranges such as
/// "pp. 1877–1901" unless nothing else qualifies.
fn ieee_year(tail: &str) -> Option<i32> {
    let candidates: Vec<_> = YEAR.captures_iter(tail).filter_map(|c| c.get(1)).collect();
    let in_range = |m: &regex::Match| {
        let before = tail[..m.start()].trim_end();
        let after = &tail[m.end()..];
        before.ends_with(['–', '-', '—'])
            || before.ends_with("pp.")
            || before.ends_with("p.")
            || after.starts_with(['–', '-', '—'])
    };
    candidates
        .iter()
        .rev()
        .find(|m| !in_range(m))
        .or(candidates.last())
        .and_then(|m| m.as_str().parse().ok())
}

fn parse_ieee(body: &str) -> Result<Fields, String> {
    let (authors_text, title, tail) = if let Some(open) = body.find(['"', '“']) {
        let quote_len = body[open..].chars().next().map_or(1, char::len_utf8);
        let after = &body[open + quote_len..];
        let close = after
            .find(['"', '”'])
            .ok_or_else(|| "unterminated quoted title".to_string())?;
        let close_len = after[close..].chars().next().map_or(1, char::len_utf8);
        (
            body[..open].trim().trim_end_matches(',').trim(),
            clean_title(&after[..close]),
            &after[close + close_len..],
        )
    } else {
        // Book style: authors, Title. Place: Publisher, Year.
        let parts: Vec<&str> = body.split(", ").collect();
        let n_authors = parts
            .iter()
            .take_while(|p| IEEE_AUTHOR.is_match(p.trim()))
            .count();
        if n_authors == 0 || n_authors == parts.len() {
            return Err("no title found".into());
        }
        let authors_end: usize = parts[..n_authors].iter().map(|p| p.len() + 2).sum();
        let rest = &body[authors_end..];
        let cut = SENTENCE_END
            .find(rest)
            .ok_or_else(|| "no title terminator".to_string())?;
        let raw_title = rest[..cut.start()].trim();
        let title = IEEE_EDITION.replace(raw_title, "").to_string();
        (
            body[..authors_end].trim().trim_end_matches(',').trim(),
            clean_title(&title),
            &rest[cut.end()..],
        )
    };
    if title.is_empty() {
        return Err("empty title".into());
    }
    let year = ieee_year(tail).ok_or_else(|| "no year".to_string())?;
    Ok(Fields {
        title,
        year: check_year(year)?,
        authors: split_ieee_authors(authors_text),
        venue: venue_from(tail),
    })
}

fn split_apa_authors(text: &str) -> Vec<String> {
    let cleaned = text.replace(", &", ",").replace(" & ", ", ");
    let mut authors: Vec<String> = Vec::new();
    for part in cleaned.split(", ").map(str::trim).filter(|p| !p.is_empty()) {
        let part = part.trim_end_matches(',');
        match authors.last_mut() {
            Some(last) if INITIALS.is_match(part) && !last.contains(", ") => {
                last.push_str(", ");
                last.push_str(part);
            }
            _ => authors.push(part.trim_end_matches('.').to_string()),
        }
    }
    authors
}

fn parse_apa(body: &str) -> Result<Fields, String> {
    let caps = APA_YEAR
        .captures(body)
        .ok_or_else(|| "no year".to_string())?;
    let year_text = caps.get(1).ok_or_else(|| "no year".to_string())?.as_str();
    let year: i32 = year_text.parse().map_err(|_| "bad year".to_string())?;
    let whole = caps.get(0).expect("match");
    let authors_text = body[..whole.start()].trim();
    let rest = APA_EDITION
        .replace_all(&body[whole.end()..], "")
        .to_string();
    let rest = rest.trim();
    let (title, tail) = match SENTENCE_END.find(rest) {
        Some(m) => {
            let keep = if rest[m.start()..].starts_with(['?', '!']) {
                1
            } else {
                0
            };
            (&rest[..m.start() + keep], &rest[m.end()..])
        }
        None => (rest, ""),
    };
    let title = clean_title(title);
    if title.is_empty() {
        return Err("empty title".into());
    }
    let venue_text = tail.split(" (").next().unwrap_or("");
    let venue = venue_from(venue_text).map(|v| {
        let cut = v.find(". ").map_or(v.as_str(), |i| &v[..i]);
        cut.split(", ")
            .take_while(|p| !p.starts_with(|c: char| c.is_ascii_digit()))
            .collect::<Vec<_>>()
            .join(", ")
    });
    Ok(Fields {
        title,
        year: check_year(year)?,
        authors: split_apa_authors(authors_text),
        venue: venue.filter(|v| !v.is_empty()),
    })
}

/// Parses one raw entry at list position `position`.
pub fn parse_reference(
    raw: &str,
    style: Style,
    position: usize,
) -> Result<ParsedReference, ReferenceDiagnostic> {
    let diagnostic = |reason: String| ReferenceDiagnostic {
        position,
        raw: raw.to_string(),
        reason,
    };
    let style = match style {
        Style::Auto => detect_style(raw),
        s => s,
    };
    let label = LABEL.captures(raw).and_then(|c| c[1].parse::<usize>().ok());
    let body = LABEL.replace(raw, "").trim().to_string();
    let fields = match style {
        Style::Apa => parse_apa(&body),
        _ => parse_ieee(&body),
    }
    .map_err(diagnostic)?;
    let mut paper = PaperNode::new(
        paper_id(&fields.title, fields.year),
        fields.title,
        fields.year,
    );
    paper.authors = fields.authors;
    paper.venue = fields.venue;
    Ok(ParsedReference {
        label,
        position,
        style,
        paper,
    })
}

pub fn parse_references(block: &str, style: Style) -> ParsedReferences {
    let mut out = ParsedReferences::default();
    for (position, raw) in split_entries(block).iter().enumerate() {
        match parse_reference(raw, style, position) {
            Ok(entry) => out.entries.push(entry),
            Err(d) => out.diagnostics.push(d),
        }
    }
    out
}

/// First author's surname: text before the first comma for APA
/// ("Surname, I."), the last word for IEEE ("I. Surname").
pub fn first_author_surname(reference: &ParsedReference) -> Option<String> {
    let first = reference.paper.authors.first()?;
    let surname = match reference.style {
        Style::Apa => first.split(',').next()?.trim().to_string(),
        _ => first.split_whitespace().last()?.to_string(),
    };
    Some(surname)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ieee_conference_entry() {
        let parsed = parse_reference(
            "[3] A. Author, \"A Title,\" in Proc. X, 2019.",
            Style::Ieee,
            0,
        )
        .unwrap();
        assert_eq!(parsed.label, Some(3));
        assert_eq!(parsed.paper.title, "A Title");
        assert_eq!(parsed.paper.year, 2019);
        assert_eq!(parsed.paper.authors, vec!["A. Author"]);
        assert_eq!(parsed.paper.venue.as_deref(), Some("Proc. X"));
    }

    #[test]
    fn apa_journal_entry() {
        let parsed =
            parse_reference("Author, A. (2019). A Title. Journal X.", Style::Apa, 0).unwrap();
        assert_eq!(parsed.paper.title, "A Title");
        assert_eq!(parsed.paper.year, 2019);
        assert_eq!(parsed.paper.authors, vec!["Author, A."]);
        assert_eq!(parsed.paper.venue.as_deref(), Some("Journal X"));
        assert_eq!(first_author_surname(&parsed).as_deref(), Some("Author"));
    }

    #[test]
    fn same_paper_same_id_across_styles() {
        let ieee = parse_reference(
            "[3] A. Author, \"A Title,\" in Proc. X, 2019.",
            Style::Auto,
            0,
        )
        .unwrap();
        let apa =
            parse_reference("Author, A. (2019). A Title. Journal X.", Style::Auto, 0).unwrap();
        assert_eq!(ieee.style, Style::Ieee);
        assert_eq!(apa.style, Style::Apa);
        assert_eq!(ieee.paper.id, apa.paper.id);
    }

    #[test]
    fn missing_year_is_diagnosed() {
        let parsed = parse_references(
            "[1] A. Author, \"Undated work,\" unpublished.\n[2] B. Writer, \"Dated,\" 2001.",
            Style::Auto,
        );
        assert_eq!(parsed.entries.len(), 1);
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].position, 0);
        assert_eq!(parsed.diagnostics[0].reason, "no year");
        let apa = parse_references("Someone, A. (n.d.). Timeless. Blog.", Style::Apa);
        assert_eq!(apa.diagnostics.len(), 1);
    }

    #[test]
    fn entry_splitting() {
        let ieee = "[1] A. B, \"One,\"\n    cont, 2001.\n[2] C. D, \"Two,\" 2002.";
        assert_eq!(split_entries(ieee).len(), 2);
        assert!(split_entries(ieee)[0].contains("cont"));
        let apa = "A, B. (2001). One. X.\n  continued.\n\nC, D. (2002). Two. Y.";
        let entries = split_entries(apa);
        assert_eq!(entries.len(), 2);
        assert!(entries[0].ends_with("continued."));
    }

    #[test]
    fn ieee_book_edition_is_dropped() {
        let parsed = parse_reference(
            "R. S. Sutton and A. G. Barto, Reinforcement Learning: An Introduction, 2nd ed. Cambridge, MA, USA: MIT Press, 2018.",
            Style::Ieee,
            0,
        )
        .unwrap();
        assert_eq!(
            parsed.paper.title,
            "Reinforcement Learning: An Introduction"
        );
        assert_eq!(parsed.paper.year, 2018);
    }
}
