//! Small text helpers shared by the mock oracle and the ingest pipeline.

/// Lowercase alphanumeric tokens.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Cuts `text` to at most `max_chars` characters, backing off to the last
/// whitespace so no word is split. A single over-long word is cut hard.
pub fn truncate_words(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let cut: String = text.chars().take(max_chars).collect();
    let next_is_space = text.chars().nth(max_chars).is_some_and(char::is_whitespace);
    if next_is_space {
        return cut.trim_end().to_string();
    }
    match cut.rfind(char::is_whitespace) {
        Some(pos) if pos > 0 => cut[..pos].trim_end().to_string(),
        _ => cut,
    }
}

/// Lowercase, punctuation stripped, whitespace collapsed.
pub fn normalize_title(title: &str) -> String {
    tokens(title).collect::<Vec<_>>().join(" ")
}
