//! ROUGE-1, ROUGE-2 and ROUGE-L between a candidate and a reference.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Corpus, Target};
use crate::num::{f_measure, Scalar};
use crate::stem::stem;
use crate::text::{is_stopword, split_sentences, word_tokens};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LcsMode {
    /// One LCS over the full token sequences.
    #[default]
    FlatSequence,
    /// Per reference sentence, the union of LCS matches against each
    /// candidate sentence, with per-token clipping.
    SentenceUnion,
}

impl std::str::FromStr for LcsMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat" => Ok(LcsMode::FlatSequence),
            "union" => Ok(LcsMode::SentenceUnion),
            other => Err(format!("unknown LCS mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RougeConfig {
    pub use_stemming: bool,
    pub remove_stopwords: bool,
    pub lcs_mode: LcsMode,
}

impl Default for RougeConfig {
    fn default() -> Self {
        RougeConfig { use_stemming: true, remove_stopwords: false, lcs_mode: LcsMode::FlatSequence }
    }
}

impl RougeConfig {
    /// Plain lowercased tokens: no stemming, no stopword removal.
    pub fn lexical() -> Self {
        RougeConfig { use_stemming: false, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> Prf<T> {
    pub fn zero() -> Self {
        Prf { precision: T::zero(), recall: T::zero(), f1: T::zero() }
    }

    /// Precision and recall from a match count; zero when either side is empty.
    pub fn from_counts(matches: u64, candidate_total: u64, reference_total: u64) -> Self {
        if candidate_total == 0 || reference_total == 0 {
            return Self::zero();
        }
        let precision = T::ratio(matches, candidate_total);
        let recall = T::ratio(matches, reference_total);
        Prf { precision, recall, f1: f_measure(precision, recall) }
    }

    fn add(self, other: Self) -> Self {
        Prf { precision: self.precision + other.precision, recall: self.recall + other.recall, f1: self.f1 + other.f1 }
    }

    fn div(self, n: T) -> Self {
        Prf { precision: self.precision / n, recall: self.recall / n, f1: self.f1 / n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RougeScores<T> {
    pub rouge1: Prf<T>,
    pub rouge2: Prf<T>,
    pub rouge_l: Prf<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RougeVariant {
    R1,
    R2,
    RL,
}

impl RougeVariant {
    pub const ALL: [RougeVariant; 3] = [RougeVariant::R1, RougeVariant::R2, RougeVariant::RL];

    pub fn label(self) -> &'static str {
        match self {
            RougeVariant::R1 => "R-1",
            RougeVariant::R2 => "R-2",
            RougeVariant::RL => "R-L",
        }
    }
}

impl<T: Copy> RougeScores<T> {
    pub fn get(&self, variant: RougeVariant) -> Prf<T> {
        match variant {
            RougeVariant::R1 => self.rouge1,
            RougeVariant::R2 => self.rouge2,
            RougeVariant::RL => self.rouge_l,
        }
    }
}

pub fn tokenize(text: &str, config: &RougeConfig) -> Vec<String> {
    word_tokens(text)
        .into_iter()
        .filter(|t| !config.remove_stopwords || !is_stopword(t))
        .map(|t| if config.use_stemming { stem(&t) } else { t })
        .collect()
}

fn ngram_counts<S: Eq + Hash>(tokens: &[S], n: usize) -> HashMap<&[S], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap: `(overlap, candidate n-grams, reference n-grams)`.
pub fn ngram_overlap<S: Eq + Hash>(candidate: &[S], reference: &[S], n: usize) -> (u64, u64, u64) {
    assert!(n >= 1, "n-gram order must be at least 1");
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = cand.iter().map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0))).sum();
    (overlap, cand.values().sum(), refs.values().sum())
}

pub fn rouge_n_tokens<T: Scalar, S: Eq + Hash>(candidate: &[S], reference: &[S], n: usize) -> Prf<T> {
    let (overlap, c, r) = ngram_overlap(candidate, reference, n);
    Prf::from_counts(overlap, c, r)
}

pub fn rouge_n<T: Scalar>(candidate: &str, reference: &str, n: usize, config: &RougeConfig) -> Prf<T> {
    rouge_n_tokens(&tokenize(candidate, config), &tokenize(reference, config), n)
}

fn lcs_table<S: Eq>(a: &[S], b: &[S]) -> Vec<Vec<u32>> {
    let mut table = vec![vec![0u32; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            table[i][j] =
                if a[i - 1] == b[j - 1] { table[i - 1][j - 1] + 1 } else { table[i - 1][j].max(table[i][j - 1]) };
        }
    }
    table
}

pub fn lcs_length<S: Eq>(a: &[S], b: &[S]) -> usize {
    lcs_table(a, b)[a.len()][b.len()] as usize
}

/// Indices into `a` of one longest common subsequence with `b`.
fn lcs_indices<S: Eq>(a: &[S], b: &[S]) -> Vec<usize> {
    let table = lcs_table(a, b);
    let (mut i, mut j) = (a.len(), b.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        if a[i - 1] == b[j - 1] {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if table[i - 1][j] >= table[i][j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

pub fn rouge_l_tokens<T: Scalar, S: Eq>(candidate: &[S], reference: &[S]) -> Prf<T> {
    let lcs = lcs_length(candidate, reference) as u64;
    Prf::from_counts(lcs, candidate.len() as u64, reference.len() as u64)
}

/// Summary-level LCS over sentence-tokenized texts.
pub fn rouge_l_union_tokens<T: Scalar>(candidate: &[Vec<String>], reference: &[Vec<String>]) -> Prf<T> {
    let mut cand_counts: HashMap<&str, u64> = HashMap::new();
    let mut ref_counts: HashMap<&str, u64> = HashMap::new();
    for t in candidate.iter().flatten() {
        *cand_counts.entry(t).or_insert(0) += 1;
    }
    for t in reference.iter().flatten() {
        *ref_counts.entry(t).or_insert(0) += 1;
    }
    let cand_total: u64 = cand_counts.values().sum();
    let ref_total: u64 = ref_counts.values().sum();

    let mut hits = 0u64;
    for ref_sentence in reference {
        let union: BTreeSet<usize> = candidate.iter().flat_map(|c| lcs_indices(ref_sentence, c)).collect();
        for idx in union {
            let token = ref_sentence[idx].as_str();
            let (Some(c), Some(r)) = (cand_counts.get_mut(token), ref_counts.get_mut(token)) else { continue };
            if *c > 0 && *r > 0 {
                hits += 1;
                *c -= 1;
                *r -= 1;
            }
        }
    }
    Prf::from_counts(hits, cand_total, ref_total)
}

pub fn rouge_l<T: Scalar>(candidate: &str, reference: &str, config: &RougeConfig) -> Prf<T> {
    match config.lcs_mode {
        LcsMode::FlatSequence => rouge_l_tokens(&tokenize(candidate, config), &tokenize(reference, config)),
        LcsMode::SentenceUnion => {
            let sentences = |text: &str| -> Vec<Vec<String>> {
                split_sentences(text).texts().map(|s| tokenize(s, config)).filter(|t| !t.is_empty()).collect()
            };
            rouge_l_union_tokens(&sentences(candidate), &sentences(reference))
        }
    }
}

pub fn rouge_scores<T: Scalar>(candidate: &str, reference: &str, config: &RougeConfig) -> RougeScores<T> {
    let cand = tokenize(candidate, config);
    let refs = tokenize(reference, config);
    let rouge_l = match config.lcs_mode {
        LcsMode::FlatSequence => rouge_l_tokens(&cand, &refs),
        LcsMode::SentenceUnion => rouge_l(candidate, reference, config),
    };
    RougeScores { rouge1: rouge_n_tokens(&cand, &refs, 1), rouge2: rouge_n_tokens(&cand, &refs, 2), rouge_l }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RougeError {
    #[error("no output for {0} in the corpus")]
    MissingOutput(Target),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRouge<T> {
    pub sample_id: String,
    pub scores: RougeScores<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RougeReport<T> {
    pub system: String,
    pub config: RougeConfig,
    pub samples: Vec<SampleRouge<T>>,
    pub mean: RougeScores<T>,
}

/// Scores every sample that has text for `target` against its reference.
pub fn rouge_corpus<T: Scalar>(
    corpus: &Corpus,
    target: &Target,
    config: &RougeConfig,
) -> Result<RougeReport<T>, RougeError> {
    let samples: Vec<SampleRouge<T>> = corpus
        .samples()
        .iter()
        .filter_map(|s| {
            s.text(target)
                .map(|text| SampleRouge { sample_id: s.id.clone(), scores: rouge_scores(text, &s.reference, config) })
        })
        .collect();
    if samples.is_empty() {
        return Err(RougeError::MissingOutput(target.clone()));
    }
    let n = T::from_count(samples.len() as u64);
    let zero = RougeScores { rouge1: Prf::zero(), rouge2: Prf::zero(), rouge_l: Prf::zero() };
    let sum = samples.iter().fold(zero, |acc, s| RougeScores {
        rouge1: acc.rouge1.add(s.scores.rouge1),
        rouge2: acc.rouge2.add(s.scores.rouge2),
        rouge_l: acc.rouge_l.add(s.scores.rouge_l),
    });
    Ok(RougeReport {
        system: target.label().to_string(),
        config: *config,
        samples,
        mean: RougeScores { rouge1: sum.rouge1.div(n), rouge2: sum.rouge2.div(n), rouge_l: sum.rouge_l.div(n) },
    })
}
