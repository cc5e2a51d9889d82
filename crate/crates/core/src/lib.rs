//! Fine-grained summarization evaluation.
//!
//! Annotators mark error spans in summaries with an issue type and a
//! syntactic label; the severity of each error follows mechanically from a
//! fixed matrix, and per-sample quality scores deduct 1, 5 or 10 points per
//! Minor, Major or Critical error, normalized by the summary's word count.
//! Around that core the crate computes system reports, ROUGE, Pearson
//! correlations, inter-annotator agreement and source-position layout bias,
//! and persists corpora and append-only annotation logs.
//!
//! Numeric modules are generic over the scalar type. The aliases below fix
//! the common choices: `f64` everywhere, and [`Rational`] for exact score
//! arithmetic.

pub mod analysis;
pub mod layout;
pub mod model;
pub mod num;
pub mod rouge;
pub mod scoring;
pub mod stats;
pub mod stem;
pub mod storage;
pub mod text;

pub use model::{
    validate_annotation, AnnotationCandidate, AnnotationSet, Aspect, Corpus, CorpusError, ErrorAnnotation, IssueType,
    Sample, Severity, Span, SyntacticLabel, Target, ValidationError,
};
pub use num::{Real, Scalar};
pub use rouge::{LcsMode, RougeConfig, RougeVariant};
pub use scoring::{lookup_severity, word_count, Aggregation, ScoreError, SeverityCounts, SeverityMatrix};
pub use storage::StorageError;

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type SampleScore = scoring::SampleScore<f64>;
pub type ExactSampleScore = scoring::SampleScore<Rational>;
pub type SystemReport = scoring::SystemReport<f64>;
pub type ExactSystemReport = scoring::SystemReport<Rational>;
pub type Prf = rouge::Prf<f64>;
pub type RougeScores = rouge::RougeScores<f64>;
pub type RougeReport = rouge::RougeReport<f64>;
pub type PairedSeries = stats::PairedSeries<f64>;
pub type Agreement = stats::Agreement<f64>;
pub type PositionDistribution = layout::PositionDistribution<f64>;
pub type ExternalScores = layout::ExternalScores<f64>;
pub type CorrelationTable = analysis::CorrelationTable<f64>;
pub type SystemSummary = analysis::SystemSummary<f64>;
pub type InstanceRecord = analysis::InstanceRecord<f64>;
