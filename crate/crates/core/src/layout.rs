//! Layout bias: which source-sentence positions summary sentences draw on.
//!
//! Every summary sentence is assigned to its most similar source sentence
//! (ties go to the earliest position). Assignments are histogrammed per
//! position, normalized to coverage and reported as `-ln(coverage + eps)`.

use std::collections::HashMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Corpus, Target};
use crate::num::Real;
use crate::rouge::{rouge_n_tokens, tokenize, RougeConfig};
use crate::text::split_sentences;

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("no external similarity score for summary sentence {summary_sentence_id:?} and source position {source_position}")]
    MissingExternalScore { summary_sentence_id: String, source_position: usize },
    #[error("sample {0:?} has no source sentences")]
    EmptySource(String),
    #[error("no output for {0} in the corpus")]
    MissingOutput(Target),
    #[error("no summary sentences to assign")]
    NoSentences,
    #[error("similarity table: {0}")]
    Table(#[from] csv::Error),
    #[error("similarity table row {row}: {message}")]
    TableValue { row: usize, message: String },
}

impl LayoutError {
    pub fn code(&self) -> &'static str {
        match self {
            LayoutError::MissingExternalScore { .. } => "MissingExternalScore",
            LayoutError::EmptySource(_) => "EmptySource",
            LayoutError::MissingOutput(_) => "MissingOutput",
            LayoutError::NoSentences => "NoSentences",
            LayoutError::Table(_) | LayoutError::TableValue { .. } => "ParseError",
        }
    }
}

/// A (summary sentence, source sentence) pair to be scored.
#[derive(Debug, Clone, Copy)]
pub struct SentencePair<'a> {
    pub sample_id: &'a str,
    /// 1-based position of the sentence in the summary.
    pub summary_position: usize,
    pub summary: &'a str,
    /// 1-based position of the sentence in the source.
    pub source_position: usize,
    pub source: &'a str,
}

impl SentencePair<'_> {
    /// Key used by external similarity tables: `<sample id>#<summary position>`.
    pub fn summary_sentence_id(&self) -> String {
        summary_sentence_id(self.sample_id, self.summary_position)
    }
}

pub fn summary_sentence_id(sample_id: &str, summary_position: usize) -> String {
    format!("{sample_id}#{summary_position}")
}

pub trait SentenceScorer<T> {
    fn similarity(&self, pair: &SentencePair<'_>) -> Result<T, LayoutError>;
}

/// Unigram-overlap F1 on lowercased, unstemmed tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalF1;

impl<T: Real> SentenceScorer<T> for LexicalF1 {
    fn similarity(&self, pair: &SentencePair<'_>) -> Result<T, LayoutError> {
        Ok(sentence_similarity(pair.summary, pair.source))
    }
}

pub fn sentence_similarity<T: Real>(a: &str, b: &str) -> T {
    let config = RougeConfig::lexical();
    rouge_n_tokens::<T, _>(&tokenize(a, &config), &tokenize(b, &config), 1).f1
}

#[derive(Debug, Deserialize)]
struct ExternalRow {
    summary_sentence_id: String,
    source_position: usize,
    score: f64,
}

/// Precomputed similarities, e.g. from a neural scorer, keyed by summary
/// sentence id and source position.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores<T> {
    table: HashMap<(String, usize), T>,
}

impl<T: Real> ExternalScores<T> {
    pub fn new() -> Self {
        ExternalScores { table: HashMap::new() }
    }

    pub fn insert(&mut self, summary_sentence_id: impl Into<String>, source_position: usize, score: T) {
        self.table.insert((summary_sentence_id.into(), source_position), score);
    }

    /// Reads a CSV with header `summary_sentence_id,source_position,score`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, LayoutError> {
        let mut scores = Self::new();
        for (i, row) in csv::Reader::from_reader(reader).deserialize::<ExternalRow>().enumerate() {
            let row = row?;
            let value = T::from_f64(row.score).filter(|v| v.is_finite()).ok_or_else(|| LayoutError::TableValue {
                row: i + 1,
                message: format!("score {} is not a finite number", row.score),
            })?;
            scores.insert(row.summary_sentence_id, row.source_position, value);
        }
        Ok(scores)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl<T: Real> SentenceScorer<T> for ExternalScores<T> {
    fn similarity(&self, pair: &SentencePair<'_>) -> Result<T, LayoutError> {
        let id = pair.summary_sentence_id();
        self.table.get(&(id, pair.source_position)).copied().ok_or_else(|| LayoutError::MissingExternalScore {
            summary_sentence_id: pair.summary_sentence_id(),
            source_position: pair.source_position,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutConfig {
    /// Positions beyond this are pooled into one tail bucket.
    pub position_cap: usize,
    /// Additive smoothing before the log.
    pub epsilon: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig { position_cap: 50, epsilon: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionBucket<T> {
    /// `"7"`, or `"51+"` for the tail bucket.
    pub label: String,
    pub count: u64,
    pub coverage: T,
    pub neg_log: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionDistribution<T> {
    pub system: String,
    pub buckets: Vec<PositionBucket<T>>,
    pub sentences_processed: u64,
    /// Samples whose summary had no sentences.
    pub skipped_empty_summaries: u64,
}

impl<T: Real> PositionDistribution<T> {
    pub fn counts(&self) -> Vec<u64> {
        self.buckets.iter().map(|b| b.count).collect()
    }

    pub fn coverage(&self) -> Vec<T> {
        self.buckets.iter().map(|b| b.coverage).collect()
    }

    pub fn neg_log(&self) -> Vec<T> {
        self.buckets.iter().map(|b| b.neg_log).collect()
    }
}

/// `-ln(coverage + epsilon)`.
pub fn neg_log_coverage<T: Real>(coverage: T, epsilon: T) -> T {
    -(coverage + epsilon).ln()
}

/// Best source position for one summary sentence; ties keep the earliest.
fn best_position<T: Real, S: SentenceScorer<T> + ?Sized>(
    scorer: &S,
    sample_id: &str,
    summary_position: usize,
    summary: &str,
    sources: &[&str],
) -> Result<usize, LayoutError> {
    let mut best: Option<(usize, T)> = None;
    for (i, source) in sources.iter().enumerate() {
        let pair = SentencePair { sample_id, summary_position, summary, source_position: i + 1, source };
        let score = scorer.similarity(&pair)?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i + 1, score));
        }
    }
    Ok(best.map(|(p, _)| p).expect("sources are non-empty"))
}

pub fn position_distribution<T: Real, S: SentenceScorer<T> + ?Sized>(
    corpus: &Corpus,
    target: &Target,
    scorer: &S,
    config: &LayoutConfig,
) -> Result<PositionDistribution<T>, LayoutError> {
    let cap = config.position_cap.max(1);
    // index = position - 1, one slot past the cap for the tail
    let mut histogram = vec![0u64; cap + 1];
    let mut max_position = 0usize;
    let mut processed = 0u64;
    let mut skipped = 0u64;
    let mut seen_output = false;

    for sample in corpus.samples() {
        let Some(summary) = sample.text(target) else { continue };
        seen_output = true;
        let source_split = split_sentences(&sample.source);
        if source_split.is_empty() {
            return Err(LayoutError::EmptySource(sample.id.clone()));
        }
        let sources: Vec<&str> = source_split.texts().collect();
        let summary_split = split_sentences(summary);
        if summary_split.is_empty() {
            skipped += 1;
            continue;
        }
        max_position = max_position.max(sources.len());
        for sentence in &summary_split.sentences {
            let position = best_position(scorer, &sample.id, sentence.position, &sentence.text, &sources)?;
            histogram[position.min(cap + 1) - 1] += 1;
            processed += 1;
        }
    }
    if !seen_output {
        return Err(LayoutError::MissingOutput(target.clone()));
    }
    if processed == 0 {
        return Err(LayoutError::NoSentences);
    }

    let len = if max_position > cap { cap + 1 } else { max_position };
    histogram.truncate(len);
    let total = T::from_count(processed);
    let epsilon = T::from_f64(config.epsilon).expect("epsilon representable");
    let buckets = histogram
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let coverage = T::from_count(count) / total;
            PositionBucket {
                label: if i == cap { format!("{}+", cap + 1) } else { (i + 1).to_string() },
                count,
                coverage,
                neg_log: neg_log_coverage(coverage, epsilon),
            }
        })
        .collect();

    Ok(PositionDistribution {
        system: target.label().to_string(),
        buckets,
        sentences_processed: processed,
        skipped_empty_summaries: skipped,
    })
}
