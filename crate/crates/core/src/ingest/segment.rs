//! Rule-based paragraph and sentence segmentation.

/// Tokens that end with a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "al", "e.g", "i.e", "eg", "ie", "etc", "vs", "cf", "fig", "figs", "eq", "eqs", "sec", "secs",
    "tab", "no", "nos", "vol", "pp", "dr", "mr", "mrs", "ms", "prof", "approx", "resp", "ref",
    "refs", "ch", "ed", "eds", "st", "jr", "inc", "corp", "ltd", "u.s", "viz", "ca",
];

/// Blank-line delimited paragraphs, whitespace collapsed. Markdown heading
/// lines are skipped.
pub fn split_paragraphs(text: &str) -> Vec<String> {
    let mut paragraphs = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut flush = |current: &mut Vec<&str>| {
        if !current.is_empty() {
            paragraphs.push(current.join(" "));
            current.clear();
        }
    };
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            flush(&mut current);
        } else {
            current.push(trimmed);
        }
    }
    flush(&mut current);
    paragraphs
        .into_iter()
        .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect()
}

fn is_abbreviation(word: &str) -> bool {
    let stripped = word
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .trim_end_matches('.');
    if stripped.is_empty() {
        return false;
    }
    // Initials such as "A." or "J.-P."
    if stripped.chars().filter(|c| c.is_alphabetic()).count() == 1
        && stripped.chars().next().is_some_and(char::is_uppercase)
    {
        return true;
    }
    ABBREVIATIONS.contains(&stripped.to_lowercase().as_str())
}

/// Splits on `.`, `!` or `?` (optionally followed by closing quotes or
/// brackets) when the next word starts with an uppercase letter, digit,
/// quote or bracket, and the word carrying the period is not an abbreviation.
pub fn split_sentences(paragraph: &str) -> Vec<String> {
    let words: Vec<&str> = paragraph.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    for i in 0..words.len() {
        let word = words[i];
        let core = word.trim_end_matches(['"', '\'', ')', ']', '”', '’']);
        let terminal = core.ends_with(['.', '!', '?']);
        if !terminal {
            continue;
        }
        let Some(next) = words.get(i + 1) else {
            continue;
        };
        let opens = next
            .chars()
            .next()
            .is_some_and(|c| c.is_uppercase() || c.is_ascii_digit() || "\"“'([".contains(c));
        if !opens {
            continue;
        }
        if core.ends_with('.') && is_abbreviation(core) {
            continue;
        }
        sentences.push(words[start..=i].join(" "));
        start = i + 1;
    }
    if start < words.len() {
        sentences.push(words[start..].join(" "));
    }
    sentences
}
