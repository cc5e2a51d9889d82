//! Tokenization, stopwords and rule-based sentence splitting.

use serde::Serialize;

/// Lowercased maximal runs of alphanumeric characters.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Fixed English function-word list used when stopword removal is enabled.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercase forms (without the trailing period) that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "a.m", "apr", "aug", "capt", "co", "col", "corp", "dec", "dr", "e.g", "etc", "feb", "fig", "gen", "gov", "i.e",
    "inc", "jan", "jr", "jul", "jun", "lt", "ltd", "mr", "mrs", "ms", "mt", "nov", "oct", "p.m", "prof", "rep", "sen",
    "sept", "sgt", "sr", "st", "u.k", "u.n", "u.s", "vs",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sentence {
    pub text: String,
    /// 1-based position within the document.
    pub position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SentenceSplit {
    pub sentences: Vec<Sentence>,
}

impl SentenceSplit {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.text.as_str())
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}' | ')' | ']')
}

fn is_opener(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}' | '(' | '[')
}

/// The word immediately before byte offset `end`, lowercased, without
/// leading punctuation.
fn word_before(text: &str, end: usize) -> String {
    let head = &text[..end];
    let start = head.rfind(char::is_whitespace).map(|i| i + head[i..].chars().next().unwrap().len_utf8()).unwrap_or(0);
    head[start..].trim_start_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

/// Splits on `.`, `!` or `?` (plus any closing quotes or brackets) followed
/// by whitespace and an uppercase letter, digit or opening quote. A single
/// period after a listed abbreviation does not split.
pub fn split_sentences(text: &str) -> SentenceSplit {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    let push = |from: usize, to: usize, out: &mut Vec<Sentence>| {
        let s = text[from..to].trim();
        if !s.is_empty() {
            out.push(Sentence { text: s.to_string(), position: out.len() + 1 });
        }
    };

    while i < chars.len() {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let punct_start = i;
        while i < chars.len() && is_terminal(chars[i].1) {
            i += 1;
        }
        let single_period = i - punct_start == 1 && chars[punct_start].1 == '.';
        while i < chars.len() && is_closer(chars[i].1) {
            i += 1;
        }
        let end = chars.get(i).map_or(text.len(), |&(b, _)| b);
        let mut next = i;
        while next < chars.len() && chars[next].1.is_whitespace() {
            next += 1;
        }
        if next == i || next >= chars.len() || !is_opener(chars[next].1) {
            continue;
        }
        if single_period && ABBREVIATIONS.binary_search(&word_before(text, chars[punct_start].0).as_str()).is_ok() {
            continue;
        }
        push(start, end, &mut sentences);
        start = end;
        i = next;
    }
    push(start, text.len(), &mut sentences);
    SentenceSplit { sentences }
}
