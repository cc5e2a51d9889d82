//! Severity matrix lookup, per-sample quality scores and system reports.

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AnnotationSet, Corpus, ErrorAnnotation, IssueType, Severity, SyntacticLabel, Target};
use crate::num::Scalar;

const BUILTIN_MATRIX: &str = include_str!("data/severity_matrix.tsv");

const NOT_APPLICABLE: &str = "N/A";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing row for {0}")]
    MissingRow(IssueType),
}

/// Total mapping from (issue type, syntactic label) to a severity, or to
/// not-applicable (`None`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeverityMatrix {
    cells: [[Option<Severity>; 8]; 8],
}

impl Default for SeverityMatrix {
    fn default() -> Self {
        Self::builtin().clone()
    }
}

impl SeverityMatrix {
    /// The shipped matrix.
    pub fn builtin() -> &'static SeverityMatrix {
        static MATRIX: OnceLock<SeverityMatrix> = OnceLock::new();
        MATRIX.get_or_init(|| SeverityMatrix::parse(BUILTIN_MATRIX).expect("builtin severity matrix is well-formed"))
    }

    /// Parses a tab-separated table: a header row naming the labels (any
    /// order, first cell ignored), then one row per issue type. Cells hold a
    /// severity name or `N/A`.
    pub fn parse(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (header_no, header) =
            lines.next().ok_or(MatrixError::Malformed { line: 1, message: "empty table".into() })?;
        let columns = header
            .split('\t')
            .skip(1)
            .map(|name| {
                name.trim()
                    .parse::<SyntacticLabel>()
                    .map_err(|e| MatrixError::Malformed { line: header_no + 1, message: e.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut sorted = columns.clone();
        sorted.sort();
        sorted.dedup();
        if columns.len() != 8 || sorted.len() != 8 {
            return Err(MatrixError::Malformed {
                line: header_no + 1,
                message: "header must name each of the 8 syntactic labels once".into(),
            });
        }

        let mut rows: [Option<[Option<Severity>; 8]>; 8] = [None; 8];
        for (no, line) in lines {
            let malformed = |message: String| MatrixError::Malformed { line: no + 1, message };
            let mut fields = line.split('\t');
            let issue: IssueType = fields
                .next()
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|e: crate::model::UnknownName| malformed(e.to_string()))?;
            let values: Vec<&str> = fields.map(str::trim).collect();
            if values.len() != 8 {
                return Err(malformed(format!("expected 8 cells, found {}", values.len())));
            }
            if rows[issue.index()].is_some() {
                return Err(malformed(format!("duplicate row for {issue}")));
            }
            let mut row = [None; 8];
            for (label, value) in columns.iter().zip(values) {
                row[label.index()] = if value == NOT_APPLICABLE {
                    None
                } else {
                    Some(value.parse::<Severity>().map_err(|e| malformed(e.to_string()))?)
                };
            }
            rows[issue.index()] = Some(row);
        }

        let mut cells = [[None; 8]; 8];
        for issue in IssueType::ALL {
            cells[issue.index()] = rows[issue.index()].ok_or(MatrixError::MissingRow(issue))?;
        }
        Ok(SeverityMatrix { cells })
    }

    pub fn lookup(&self, issue: IssueType, label: SyntacticLabel) -> Option<Severity> {
        self.cells[issue.index()][label.index()]
    }

    /// Labels that form an applicable cell with `issue`, in label order.
    pub fn valid_labels(&self, issue: IssueType) -> Vec<SyntacticLabel> {
        SyntacticLabel::ALL.into_iter().filter(|&l| self.lookup(issue, l).is_some()).collect()
    }

    pub fn not_applicable_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }
}

/// Free-function form of [`SeverityMatrix::lookup`] on the shipped matrix.
pub fn lookup_severity(issue: IssueType, label: SyntacticLabel) -> Option<Severity> {
    SeverityMatrix::builtin().lookup(issue, label)
}

/// Whitespace-delimited token count.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SeverityCounts {
    pub minor: u64,
    pub major: u64,
    pub critical: u64,
}

impl SeverityCounts {
    pub fn get(&self, severity: Severity) -> u64 {
        match severity {
            Severity::Minor => self.minor,
            Severity::Major => self.major,
            Severity::Critical => self.critical,
        }
    }

    pub fn add(&mut self, severity: Severity, n: u64) {
        match severity {
            Severity::Minor => self.minor += n,
            Severity::Major => self.major += n,
            Severity::Critical => self.critical += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.minor + self.major + self.critical
    }

    pub fn weighted(&self) -> u64 {
        Severity::ALL.iter().map(|&s| self.get(s) * s.weight()).sum()
    }

    fn merge(&mut self, other: &SeverityCounts) {
        for s in Severity::ALL {
            self.add(s, other.get(s));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("sample {sample_id:?} ({target}) has no words to score")]
    ZeroWordCount { sample_id: String, target: Target },
    #[error("no output for {target}{}", .sample_id.as_ref().map(|s| format!(" in sample {s:?}")).unwrap_or_default())]
    MissingOutput { sample_id: Option<String>, target: Target },
}

/// `(1 - weighted / words) * 100`, evaluated as `100 * (words - weighted) / words`
/// so that exact cases stay exact in floating point.
pub fn quality_score<T: Scalar>(weighted: u64, words: u64) -> T {
    let numerator = 100 * (words as i64 - weighted as i64);
    T::from_signed(numerator) / T::from_count(words)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleScore<T> {
    pub sample_id: String,
    pub target: Target,
    pub word_count: u64,
    pub counts: SeverityCounts,
    pub weighted_deduction: u64,
    pub score: T,
}

/// Scores one evaluated text. Scores are not clamped and go negative once the
/// weighted deduction exceeds the word count.
pub fn score_sample<'a, T, I>(
    sample_id: &str,
    target: &Target,
    annotations: I,
    word_count: u64,
) -> Result<SampleScore<T>, ScoreError>
where
    T: Scalar,
    I: IntoIterator<Item = &'a ErrorAnnotation>,
{
    if word_count == 0 {
        return Err(ScoreError::ZeroWordCount { sample_id: sample_id.to_string(), target: target.clone() });
    }
    let mut counts = SeverityCounts::default();
    for a in annotations {
        counts.add(a.severity, 1);
    }
    let weighted = counts.weighted();
    Ok(SampleScore {
        sample_id: sample_id.to_string(),
        target: target.clone(),
        word_count,
        counts,
        weighted_deduction: weighted,
        score: quality_score(weighted, word_count),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean of per-sample scores.
    #[default]
    Macro,
    /// One score over pooled deductions and pooled word counts.
    Micro,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro" => Ok(Aggregation::Macro),
            "micro" => Ok(Aggregation::Micro),
            other => Err(format!("unknown aggregation {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemReport<T> {
    pub system: String,
    pub target: Target,
    pub samples: Vec<SampleScore<T>>,
    /// Error counts per issue type in report row order.
    pub issue_counts: Vec<(IssueType, u64)>,
    pub severity_counts: SeverityCounts,
    pub total_errors: u64,
    pub total_words: u64,
    pub errors_per_1k_words: T,
    pub macro_score: T,
    pub micro_score: T,
}

impl<T: Scalar> SystemReport<T> {
    pub fn score(&self, aggregation: Aggregation) -> T {
        match aggregation {
            Aggregation::Macro => self.macro_score,
            Aggregation::Micro => self.micro_score,
        }
    }

    pub fn issue_count(&self, issue: IssueType) -> u64 {
        self.issue_counts.iter().find(|(i, _)| *i == issue).map(|(_, n)| *n).unwrap_or(0)
    }
}

/// Builds the report for one target kind (a system, or the references) over
/// every sample that has text for it. Annotations from all annotators in
/// `annotations` are pooled per sample.
pub fn build_system_report<T: Scalar>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    target: &Target,
) -> Result<SystemReport<T>, ScoreError> {
    for a in annotations.iter().filter(|a| &a.target == target) {
        if corpus.text(&a.sample_id, target).is_none() {
            return Err(ScoreError::MissingOutput { sample_id: Some(a.sample_id.clone()), target: target.clone() });
        }
    }

    let mut samples = Vec::new();
    let mut issue_tally = [0u64; 8];
    let mut severity_counts = SeverityCounts::default();
    for sample in corpus.samples() {
        let Some(text) = sample.text(target) else { continue };
        let anns: Vec<&ErrorAnnotation> = annotations.for_target(&sample.id, target).collect();
        for a in &anns {
            issue_tally[a.issue_type.index()] += 1;
        }
        let score = score_sample::<T, _>(&sample.id, target, anns, word_count(text))?;
        severity_counts.merge(&score.counts);
        samples.push(score);
    }
    if samples.is_empty() {
        return Err(ScoreError::MissingOutput { sample_id: None, target: target.clone() });
    }

    let total_words: u64 = samples.iter().map(|s| s.word_count).sum();
    let total_weighted: u64 = samples.iter().map(|s| s.weighted_deduction).sum();
    let total_errors = severity_counts.total();
    let score_sum = samples.iter().fold(T::zero(), |acc, s| acc + s.score);
    let issue_counts = IssueType::REPORT_ORDER.iter().map(|&i| (i, issue_tally[i.index()])).collect();

    Ok(SystemReport {
        system: target.label().to_string(),
        target: target.clone(),
        macro_score: score_sum / T::from_count(samples.len() as u64),
        micro_score: quality_score(total_weighted, total_words),
        errors_per_1k_words: T::from_count(1000 * total_errors) / T::from_count(total_words),
        samples,
        issue_counts,
        severity_counts,
        total_errors,
        total_words,
    })
}

/// Reports for every system in the corpus, in sorted name order.
pub fn build_all_reports<T: Scalar>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
) -> Result<Vec<SystemReport<T>>, ScoreError> {
    corpus
        .system_names()
        .into_iter()
        .map(|name| build_system_report(corpus, annotations, &Target::System(name)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Sample, Span};
    use chrono::Utc;
    use num_rational::Ratio;
    use std::collections::BTreeMap;

    fn ann(id: &str, sample: &str, severity: Severity, issue: IssueType) -> ErrorAnnotation {
        ErrorAnnotation {
            id: id.into(),
            sample_id: sample.into(),
            target: Target::system("sys"),
            span: Span::new(0, 1),
            issue_type: issue,
            syntactic_label: SyntacticLabel::Subject,
            severity,
            annotator: "a".into(),
            created_at: Utc::now(),
        }
    }

    fn words(n: usize) -> String {
        vec!["w"; n].join(" ")
    }

    #[test]
    fn spot_cells() {
        assert_eq!(lookup_severity(IssueType::Addition, SyntacticLabel::FunctionWord), Some(Severity::Minor));
        assert_eq!(
            lookup_severity(IssueType::InaccuracyExtrinsic, SyntacticLabel::Attribute),
            Some(Severity::Critical)
        );
        assert_eq!(lookup_severity(IssueType::WordOrder, SyntacticLabel::Predicate), Some(Severity::Major));
        assert_eq!(lookup_severity(IssueType::Duplication, SyntacticLabel::WholeSentence), Some(Severity::Major));
        assert_eq!(lookup_severity(IssueType::PositiveNegativeAspect, SyntacticLabel::FunctionWord), None);
        assert_eq!(SeverityMatrix::builtin().not_applicable_count(), 14);
    }

    #[test]
    fn parse_rejects_bad_tables() {
        assert!(matches!(SeverityMatrix::parse(""), Err(MatrixError::Malformed { .. })));
        let missing_row: String = BUILTIN_MATRIX.lines().take(8).collect::<Vec<_>>().join("\n");
        assert_eq!(SeverityMatrix::parse(&missing_row), Err(MatrixError::MissingRow(IssueType::WordOrder)));
        let bad_cell = BUILTIN_MATRIX.replace("Addition\tCritical", "Addition\tSevere");
        assert!(matches!(SeverityMatrix::parse(&bad_cell), Err(MatrixError::Malformed { line: 2, .. })));
    }

    #[test]
    fn word_counts() {
        assert_eq!(word_count("the cat sat"), 3);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("  a  b\n c "), 3);
    }

    #[test]
    fn sample_scores() {
        let t = Target::system("sys");
        let none: Vec<ErrorAnnotation> = vec![];
        assert_eq!(score_sample::<f64, _>("s", &t, &none, 100).unwrap().score, 100.0);

        let three = vec![
            ann("1", "s", Severity::Minor, IssueType::Addition),
            ann("2", "s", Severity::Major, IssueType::Addition),
            ann("3", "s", Severity::Critical, IssueType::Addition),
        ];
        let s = score_sample::<f64, _>("s", &t, &three, 160).unwrap();
        assert_eq!(s.weighted_deduction, 16);
        assert_eq!(s.score, 90.0);

        let crit: Vec<_> = (0..12).map(|i| ann(&i.to_string(), "s", Severity::Critical, IssueType::Omission)).collect();
        let s = score_sample::<f64, _>("s", &t, &crit, 60).unwrap();
        assert_eq!(s.weighted_deduction, 120);
        assert_eq!(s.score, -100.0);
        let exact = score_sample::<Ratio<i64>, _>("s", &t, &crit, 60).unwrap();
        assert_eq!(exact.score, Ratio::from_integer(-100));

        assert_eq!(
            score_sample::<f64, _>("s", &t, &none, 0).unwrap_err(),
            ScoreError::ZeroWordCount { sample_id: "s".into(), target: t }
        );
    }

    fn corpus(word_counts: &[usize]) -> Corpus {
        Corpus::new(
            word_counts
                .iter()
                .enumerate()
                .map(|(i, &n)| Sample {
                    id: format!("s{i}"),
                    source: "src".into(),
                    reference: "ref".into(),
                    system_outputs: BTreeMap::from([("sys".to_string(), words(n))]),
                })
                .collect(),
        )
        .unwrap()
    }

    fn set(items: Vec<ErrorAnnotation>) -> AnnotationSet {
        let mut s = AnnotationSet::new();
        for a in items {
            s.insert(a).unwrap();
        }
        s
    }

    #[test]
    fn report_single_clean_sample() {
        let r = build_system_report::<f64>(&corpus(&[10]), &AnnotationSet::new(), &Target::system("sys")).unwrap();
        assert_eq!(r.macro_score, 100.0);
        assert_eq!(r.micro_score, 100.0);
        assert_eq!(r.errors_per_1k_words, 0.0);
        assert_eq!(r.total_errors, 0);
    }

    #[test]
    fn report_equal_word_counts() {
        let anns = set(vec![
            ann("1", "s0", Severity::Critical, IssueType::Omission),
            ann("2", "s0", Severity::Critical, IssueType::Addition),
        ]);
        let r = build_system_report::<f64>(&corpus(&[100, 100]), &anns, &Target::system("sys")).unwrap();
        assert_eq!(r.samples[0].score, 80.0);
        assert_eq!(r.macro_score, 90.0);
        assert_eq!(r.micro_score, 90.0);
    }

    #[test]
    fn report_unequal_word_counts() {
        let anns = set(vec![ann("1", "s0", Severity::Critical, IssueType::Omission)]);
        let r = build_system_report::<f64>(&corpus(&[50, 150]), &anns, &Target::system("sys")).unwrap();
        assert_eq!(r.macro_score, 90.0);
        assert_eq!(r.micro_score, 95.0);
        assert_eq!(r.errors_per_1k_words, 5.0);
        assert_eq!(r.issue_count(IssueType::Omission), 1);
        let issue_sum: u64 = r.issue_counts.iter().map(|(_, n)| n).sum();
        assert_eq!(issue_sum, r.total_errors);
        assert_eq!(r.severity_counts.total(), r.total_errors);
        let order: Vec<_> = r.issue_counts.iter().map(|(i, _)| *i).collect();
        assert_eq!(order, IssueType::REPORT_ORDER.to_vec());
    }

    #[test]
    fn report_missing_output() {
        let anns = set(vec![ann("1", "s0", Severity::Critical, IssueType::Omission)]);
        let err = build_system_report::<f64>(&corpus(&[5]), &anns, &Target::system("other")).unwrap_err();
        assert!(matches!(err, ScoreError::MissingOutput { sample_id: None, .. }));
        let mut orphan = ann("2", "nope", Severity::Minor, IssueType::Addition);
        orphan.span = Span::new(1, 2);
        let err = build_system_report::<f64>(&corpus(&[5]), &set(vec![orphan]), &Target::system("sys")).unwrap_err();
        assert!(matches!(err, ScoreError::MissingOutput { sample_id: Some(_), .. }));
    }
}
