//! Domain vocabulary: taxonomy enums, samples, spans and annotations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scoring::SeverityMatrix;

/// Top-level grouping of issue types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Aspect {
    Accuracy,
    Fluency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IssueType {
    Addition,
    Omission,
    InaccuracyIntrinsic,
    InaccuracyExtrinsic,
    PositiveNegativeAspect,
    Duplication,
    WordForm,
    WordOrder,
}

impl IssueType {
    pub const ALL: [IssueType; 8] = [
        IssueType::Addition,
        IssueType::Omission,
        IssueType::InaccuracyIntrinsic,
        IssueType::InaccuracyExtrinsic,
        IssueType::PositiveNegativeAspect,
        IssueType::Duplication,
        IssueType::WordForm,
        IssueType::WordOrder,
    ];

    /// Row order used by system reports: accuracy issues, then word order,
    /// word form and duplication.
    pub const REPORT_ORDER: [IssueType; 8] = [
        IssueType::Addition,
        IssueType::Omission,
        IssueType::InaccuracyIntrinsic,
        IssueType::InaccuracyExtrinsic,
        IssueType::PositiveNegativeAspect,
        IssueType::WordOrder,
        IssueType::WordForm,
        IssueType::Duplication,
    ];

    pub fn aspect(self) -> Aspect {
        match self {
            IssueType::Addition
            | IssueType::Omission
            | IssueType::InaccuracyIntrinsic
            | IssueType::InaccuracyExtrinsic
            | IssueType::PositiveNegativeAspect => Aspect::Accuracy,
            IssueType::Duplication | IssueType::WordForm | IssueType::WordOrder => Aspect::Fluency,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IssueType::Addition => "Addition",
            IssueType::Omission => "Omission",
            IssueType::InaccuracyIntrinsic => "InaccuracyIntrinsic",
            IssueType::InaccuracyExtrinsic => "InaccuracyExtrinsic",
            IssueType::PositiveNegativeAspect => "PositiveNegativeAspect",
            IssueType::Duplication => "Duplication",
            IssueType::WordForm => "WordForm",
            IssueType::WordOrder => "WordOrder",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for IssueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IssueType {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IssueType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownName { kind: "issue type", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SyntacticLabel {
    Subject,
    Predicate,
    Object,
    NumberTime,
    PlaceName,
    Attribute,
    FunctionWord,
    WholeSentence,
}

impl SyntacticLabel {
    pub const ALL: [SyntacticLabel; 8] = [
        SyntacticLabel::Subject,
        SyntacticLabel::Predicate,
        SyntacticLabel::Object,
        SyntacticLabel::NumberTime,
        SyntacticLabel::PlaceName,
        SyntacticLabel::Attribute,
        SyntacticLabel::FunctionWord,
        SyntacticLabel::WholeSentence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntacticLabel::Subject => "Subject",
            SyntacticLabel::Predicate => "Predicate",
            SyntacticLabel::Object => "Object",
            SyntacticLabel::NumberTime => "NumberTime",
            SyntacticLabel::PlaceName => "PlaceName",
            SyntacticLabel::Attribute => "Attribute",
            SyntacticLabel::FunctionWord => "FunctionWord",
            SyntacticLabel::WholeSentence => "WholeSentence",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SyntacticLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntacticLabel {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SyntacticLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownName { kind: "syntactic label", name: s.to_string() })
    }
}

/// Impact level of an error, carrying its deduction weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Minor,
    Major,
    Critical,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Minor, Severity::Major, Severity::Critical];

    /// Display order of the severity rows in reports (most severe first).
    pub const REPORT_ORDER: [Severity; 3] = [Severity::Critical, Severity::Major, Severity::Minor];

    pub const fn weight(self) -> u64 {
        match self {
            Severity::Minor => 1,
            Severity::Major => 5,
            Severity::Critical => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Severity::Minor => "Minor",
            Severity::Major => "Major",
            Severity::Critical => "Critical",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Severity {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Severity::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| UnknownName { kind: "severity", name: s.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} {name:?}")]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
}

/// Which text of a sample an annotation points into.
///
/// Serialized as `reference` or `system:<name>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Reference,
    System(String),
}

impl Target {
    pub fn system(name: impl Into<String>) -> Self {
        Target::System(name.into())
    }

    pub fn system_name(&self) -> Option<&str> {
        match self {
            Target::Reference => None,
            Target::System(name) => Some(name),
        }
    }

    /// Display name: the system name, or `reference`.
    pub fn label(&self) -> &str {
        match self {
            Target::Reference => "reference",
            Target::System(name) => name,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Reference => f.write_str("reference"),
            Target::System(name) => write!(f, "system:{name}"),
        }
    }
}

impl FromStr for Target {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "reference" {
            return Ok(Target::Reference);
        }
        match s.strip_prefix("system:") {
            Some(name) if !name.is_empty() => Ok(Target::System(name.to_string())),
            _ => Err(UnknownName { kind: "target", name: s.to_string() }),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open interval of character (Unicode scalar value) offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// The covered slice of `text`, or `None` if out of bounds.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.is_empty() {
            return None;
        }
        let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
        let start = indices.nth(self.start)?;
        let end = indices.nth(self.end - self.start - 1)?;
        Some(&text[start..end])
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub source: String,
    pub reference: String,
    #[serde(default)]
    pub system_outputs: BTreeMap<String, String>,
}

impl Sample {
    pub fn text(&self, target: &Target) -> Option<&str> {
        match target {
            Target::Reference => Some(&self.reference),
            Target::System(name) => self.system_outputs.get(name).map(String::as_str),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {0:?} has an empty source")]
    EmptySource(String),
    #[error("sample id must not be empty")]
    EmptyId,
}

/// An ordered collection of samples with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(samples: Vec<Sample>) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        for sample in samples {
            corpus.push(sample)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, sample: Sample) -> Result<(), CorpusError> {
        if sample.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if sample.source.trim().is_empty() {
            return Err(CorpusError::EmptySource(sample.id));
        }
        if self.index.contains_key(&sample.id) {
            return Err(CorpusError::DuplicateId(sample.id));
        }
        self.index.insert(sample.id.clone(), self.samples.len());
        self.samples.push(sample);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Every system name that has at least one output, sorted.
    pub fn system_names(&self) -> Vec<String> {
        let names: BTreeSet<&String> = self.samples.iter().flat_map(|s| s.system_outputs.keys()).collect();
        names.into_iter().cloned().collect()
    }

    pub fn text(&self, sample_id: &str, target: &Target) -> Option<&str> {
        self.get(sample_id).and_then(|s| s.text(target))
    }
}

/// An annotation as submitted, before severity derivation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationCandidate {
    pub id: String,
    pub sample_id: String,
    pub target: Target,
    pub span: Span,
    pub issue_type: IssueType,
    pub syntactic_label: SyntacticLabel,
    pub annotator: String,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorAnnotation {
    pub id: String,
    pub sample_id: String,
    pub target: Target,
    pub span: Span,
    pub issue_type: IssueType,
    pub syntactic_label: SyntacticLabel,
    pub severity: Severity,
    pub annotator: String,
    pub created_at: DateTime<Utc>,
}

impl ErrorAnnotation {
    pub fn candidate(&self) -> AnnotationCandidate {
        AnnotationCandidate {
            id: self.id.clone(),
            sample_id: self.sample_id.clone(),
            target: self.target.clone(),
            span: self.span,
            issue_type: self.issue_type,
            syntactic_label: self.syntactic_label,
            annotator: self.annotator.clone(),
            created_at: self.created_at,
        }
    }

    fn identity(&self) -> AnnotationKey<'_> {
        AnnotationKey {
            sample_id: &self.sample_id,
            target: &self.target,
            span: self.span,
            issue_type: self.issue_type,
            syntactic_label: self.syntactic_label,
            annotator: &self.annotator,
        }
    }
}

#[derive(PartialEq, Eq)]
struct AnnotationKey<'a> {
    sample_id: &'a str,
    target: &'a Target,
    span: Span,
    issue_type: IssueType,
    syntactic_label: SyntacticLabel,
    annotator: &'a str,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("span {span} out of bounds for text of {len} characters")]
    SpanOutOfBounds { span: Span, len: usize },
    #[error("{issue_type} cannot be labelled {syntactic_label}; valid labels: {}", join_labels(.valid_labels))]
    InvalidCell { issue_type: IssueType, syntactic_label: SyntacticLabel, valid_labels: Vec<SyntacticLabel> },
    #[error("sample {sample_id:?} has no output for {target}")]
    UnknownTarget { sample_id: String, target: Target },
    #[error("unknown sample {0:?}")]
    UnknownSample(String),
    #[error("annotation {0:?} duplicates an existing annotation")]
    DuplicateAnnotation(String),
    #[error("annotation id {0:?} already in use")]
    DuplicateId(String),
}

impl ValidationError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ValidationError::SpanOutOfBounds { .. } => "SpanOutOfBounds",
            ValidationError::InvalidCell { .. } => "InvalidCell",
            ValidationError::UnknownTarget { .. } => "UnknownTarget",
            ValidationError::UnknownSample(_) => "UnknownSample",
            ValidationError::DuplicateAnnotation(_) => "DuplicateAnnotation",
            ValidationError::DuplicateId(_) => "DuplicateId",
        }
    }
}

fn join_labels(labels: &[SyntacticLabel]) -> String {
    labels.iter().map(|l| l.name()).collect::<Vec<_>>().join(", ")
}

/// Checks a candidate against its sample and derives its severity.
///
/// Duplicate detection needs the surrounding set and happens in
/// [`AnnotationSet::insert`].
pub fn validate_annotation(
    candidate: AnnotationCandidate,
    sample: &Sample,
    matrix: &SeverityMatrix,
) -> Result<ErrorAnnotation, ValidationError> {
    if candidate.sample_id != sample.id {
        return Err(ValidationError::UnknownSample(candidate.sample_id));
    }
    let text = sample.text(&candidate.target).ok_or_else(|| ValidationError::UnknownTarget {
        sample_id: sample.id.clone(),
        target: candidate.target.clone(),
    })?;
    let len = text.chars().count();
    if candidate.span.start >= candidate.span.end || candidate.span.end > len {
        return Err(ValidationError::SpanOutOfBounds { span: candidate.span, len });
    }
    let severity =
        matrix.lookup(candidate.issue_type, candidate.syntactic_label).ok_or_else(|| ValidationError::InvalidCell {
            issue_type: candidate.issue_type,
            syntactic_label: candidate.syntactic_label,
            valid_labels: matrix.valid_labels(candidate.issue_type),
        })?;
    Ok(ErrorAnnotation {
        id: candidate.id,
        sample_id: candidate.sample_id,
        target: candidate.target,
        span: candidate.span,
        issue_type: candidate.issue_type,
        syntactic_label: candidate.syntactic_label,
        severity,
        annotator: candidate.annotator,
        created_at: candidate.created_at,
    })
}

/// Validated annotations in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    items: Vec<ErrorAnnotation>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ErrorAnnotation> {
        self.items.iter()
    }

    pub fn get(&self, id: &str) -> Option<&ErrorAnnotation> {
        self.items.iter().find(|a| a.id == id)
    }

    /// Whether `annotation` would collide with a stored one (same id, or same
    /// sample, target, span, issue, label and annotator).
    pub fn check_insert(&self, annotation: &ErrorAnnotation) -> Result<(), ValidationError> {
        if self.get(&annotation.id).is_some() {
            return Err(ValidationError::DuplicateId(annotation.id.clone()));
        }
        let key = annotation.identity();
        if self.items.iter().any(|a| a.identity() == key) {
            return Err(ValidationError::DuplicateAnnotation(annotation.id.clone()));
        }
        Ok(())
    }

    pub fn insert(&mut self, annotation: ErrorAnnotation) -> Result<(), ValidationError> {
        self.check_insert(&annotation)?;
        self.items.push(annotation);
        Ok(())
    }

    /// Validates and inserts in one step.
    pub fn add(
        &mut self,
        candidate: AnnotationCandidate,
        sample: &Sample,
        matrix: &SeverityMatrix,
    ) -> Result<&ErrorAnnotation, ValidationError> {
        let annotation = validate_annotation(candidate, sample, matrix)?;
        self.insert(annotation)?;
        Ok(self.items.last().expect("just inserted"))
    }

    pub fn remove(&mut self, id: &str) -> Option<ErrorAnnotation> {
        let pos = self.items.iter().position(|a| a.id == id)?;
        Some(self.items.remove(pos))
    }

    /// Annotations on one (sample, target) across all annotators.
    pub fn for_target<'a>(
        &'a self,
        sample_id: &'a str,
        target: &'a Target,
    ) -> impl Iterator<Item = &'a ErrorAnnotation> + 'a {
        self.items.iter().filter(move |a| a.sample_id == sample_id && &a.target == target)
    }

    pub fn annotators(&self) -> BTreeSet<&str> {
        self.items.iter().map(|a| a.annotator.as_str()).collect()
    }

    pub fn by_annotator(&self, annotator: &str) -> AnnotationSet {
        AnnotationSet { items: self.items.iter().filter(|a| a.annotator == annotator).cloned().collect() }
    }

    /// Groups by (sample id, target, annotator).
    pub fn groups(&self) -> BTreeMap<(&str, &Target, &str), Vec<&ErrorAnnotation>> {
        let mut groups: BTreeMap<_, Vec<_>> = BTreeMap::new();
        for a in &self.items {
            groups.entry((a.sample_id.as_str(), &a.target, a.annotator.as_str())).or_default().push(a);
        }
        groups
    }
}

impl<'a> IntoIterator for &'a AnnotationSet {
    type Item = &'a ErrorAnnotation;
    type IntoIter = std::slice::Iter<'a, ErrorAnnotation>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}
