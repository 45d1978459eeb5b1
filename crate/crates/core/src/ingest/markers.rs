//! Citation markers inside survey sentences.
//!
//! Recognized forms: `[3]`, `[3–5]`, `[3, 7]`, `[2, 4-6]`, `(Smith, 2019)`,
//! `(Smith et al., 2019)`, `(Smith and Lee, 2019)` and `;`-separated lists of
//! the author-year forms.

use std::sync::LazyLock;

use regex::Regex;

static NUMERIC: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*(\d+(?:\s*[-–—]\s*\d+)?(?:\s*,\s*\d+(?:\s*[-–—]\s*\d+)?)*)\s*\]")
        .expect("valid regex")
});
static PARENTHETICAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\(([^()]*\b\d{4}[a-z]?)\)").expect("valid regex"));
static AUTHOR_YEAR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?:(?:see|e\.g\.|cf\.)\s*,?\s*)?(\p{Lu}[\p{L}'’\-]+(?:\s+\p{Lu}[\p{L}'’\-]+)?)(?:\s+et\s+al\.?|\s+(?:and|&)\s+\p{Lu}[\p{L}'’\-]+)?,?\s+(\d{4})[a-z]?$",
    )
    .expect("valid regex")
});
static SPACE_BEFORE_PUNCT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\s+([.,;:!?])").expect("valid regex"));
static DANGLING_SEPARATOR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[,;]+([.!?])").expect("valid regex"));
static DOUBLE_SPACE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\s{2,}").expect("valid regex"));
static EMPTY_PUNCT_RUN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([,;])(?:\s*[,;])+").expect("valid regex"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkerTarget {
    /// 1-based reference numbers.
    Numbers(Vec<usize>),
    /// (first-author surname, year) pairs.
    AuthorYear(Vec<(String, i32)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marker {
    pub start: usize,
    pub end: usize,
    pub target: MarkerTarget,
}

fn expand_numbers(list: &str) -> Option<Vec<usize>> {
    let mut out = Vec::new();
    for part in list.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once(['-', '–', '—']) {
            let (a, b): (usize, usize) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            if b < a || b - a > 200 {
                return None;
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().ok()?);
        }
    }
    Some(out)
}

fn parse_author_year(inner: &str) -> Option<Vec<(String, i32)>> {
    inner
        .split(';')
        .map(|part| {
            let caps = AUTHOR_YEAR.captures(part.trim())?;
            Some((caps[1].to_string(), caps[2].parse().ok()?))
        })
        .collect()
}

/// All markers in order of appearance.
pub fn find_markers(sentence: &str) -> Vec<Marker> {
    let mut markers: Vec<Marker> = NUMERIC
        .captures_iter(sentence)
        .filter_map(|caps| {
            let whole = caps.get(0)?;
            Some(Marker {
                start: whole.start(),
                end: whole.end(),
                target: MarkerTarget::Numbers(expand_numbers(&caps[1])?),
            })
        })
        .collect();
    markers.extend(PARENTHETICAL.captures_iter(sentence).filter_map(|caps| {
        let whole = caps.get(0)?;
        Some(Marker {
            start: whole.start(),
            end: whole.end(),
            target: MarkerTarget::AuthorYear(parse_author_year(&caps[1])?),
        })
    }));
    markers.sort_by_key(|m| m.start);
    markers
}

/// Removes the given markers and tidies the spacing they leave behind.
pub fn strip_markers(sentence: &str, markers: &[Marker]) -> String {
    let mut out = String::with_capacity(sentence.len());
    let mut cursor = 0;
    for m in markers {
        out.push_str(&sentence[cursor..m.start]);
        out.push(' ');
        cursor = m.end;
    }
    out.push_str(&sentence[cursor..]);
    let out = EMPTY_PUNCT_RUN.replace_all(&out, "$1");
    let out = SPACE_BEFORE_PUNCT.replace_all(&out, "$1");
    let out = DANGLING_SEPARATOR.replace_all(&out, "$1");
    let out = DOUBLE_SPACE.replace_all(&out, " ");
    let out = out.trim();
    out.trim_start_matches([',', ';']).trim().to_string()
}
