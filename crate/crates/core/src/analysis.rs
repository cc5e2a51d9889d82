//! Cross-analyses that combine scores, ROUGE and statistics: the
//! correlation table and per-document scores for annotator agreement.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotationSet, Corpus, Target};
use crate::num::Real;
use crate::rouge::{rouge_scores, RougeConfig, RougeScores, RougeVariant};
use crate::scoring::{build_system_report, score_sample, word_count, Aggregation, ScoreError};
use crate::stats::{
    instance_correlation, inter_annotator_agreement, system_correlation, Agreement, AspectFilter, ErrorProfile,
    InstancePoint, StatsError,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("system table: {0}")]
    Table(#[from] csv::Error),
}

/// One evaluated output: its ROUGE scores, PolyTope score and error aspects.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRecord<T> {
    pub sample_id: String,
    pub system: String,
    pub rouge: RougeScores<T>,
    pub polytope: T,
    pub profile: ErrorProfile,
}

/// Records for every (sample, system) output, in corpus then system order.
pub fn instance_records<T: Real>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    systems: &[String],
    config: &RougeConfig,
) -> Result<Vec<InstanceRecord<T>>, AnalysisError> {
    let mut out = Vec::new();
    for sample in corpus.samples() {
        for system in systems {
            let target = Target::System(system.clone());
            let Some(text) = sample.text(&target) else { continue };
            let anns: Vec<_> = annotations.for_target(&sample.id, &target).collect();
            let score = score_sample::<T, _>(&sample.id, &target, anns.iter().copied(), word_count(text))?;
            out.push(InstanceRecord {
                sample_id: sample.id.clone(),
                system: system.clone(),
                rouge: rouge_scores(text, &sample.reference, config),
                polytope: score.score,
                profile: ErrorProfile::from_annotations(anns),
            });
        }
    }
    Ok(out)
}

/// System-level summary row: mean ROUGE F1 values and the PolyTope score,
/// all on the same scale as their source (fractions or percentages).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary<T> {
    pub system: String,
    pub rouge1: T,
    pub rouge2: T,
    pub rouge_l: T,
    pub polytope: T,
}

impl<T: Copy> SystemSummary<T> {
    pub fn rouge(&self, variant: RougeVariant) -> T {
        match variant {
            RougeVariant::R1 => self.rouge1,
            RougeVariant::R2 => self.rouge2,
            RougeVariant::RL => self.rouge_l,
        }
    }
}

/// Reads a CSV with header `system,rouge1,rouge2,rouge_l,polytope`.
pub fn read_system_summaries<T, R>(reader: R) -> Result<Vec<SystemSummary<T>>, AnalysisError>
where
    T: Real + for<'de> Deserialize<'de>,
    R: Read,
{
    let rows = csv::Reader::from_reader(reader).deserialize().collect::<Result<Vec<_>, _>>()?;
    Ok(rows)
}

/// Summaries computed from annotations: mean ROUGE F1 per system and the
/// chosen PolyTope aggregation.
pub fn system_summaries<T: Real>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    systems: &[String],
    config: &RougeConfig,
    aggregation: Aggregation,
) -> Result<Vec<SystemSummary<T>>, AnalysisError> {
    systems
        .iter()
        .map(|system| {
            let target = Target::System(system.clone());
            let report = build_system_report::<T>(corpus, annotations, &target)?;
            let rouge = crate::rouge::rouge_corpus::<T>(corpus, &target, config)
                .map_err(|_| ScoreError::MissingOutput { sample_id: None, target: target.clone() })?;
            Ok(SystemSummary {
                system: system.clone(),
                rouge1: rouge.mean.rouge1.f1,
                rouge2: rouge.mean.rouge2.f1,
                rouge_l: rouge.mean.rouge_l.f1,
                polytope: report.score(aggregation),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCell<T> {
    pub value: Option<T>,
    /// Error code when the coefficient is undefined.
    pub error: Option<&'static str>,
}

impl<T> From<Result<T, StatsError>> for CorrelationCell<T> {
    fn from(result: Result<T, StatsError>) -> Self {
        match result {
            Ok(v) => CorrelationCell { value: Some(v), error: None },
            Err(e) => CorrelationCell { value: None, error: Some(e.code()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow<T> {
    /// `Instance` or `System`.
    pub level: String,
    /// Human measure: `PolyTope`, `Accuracy`, `Fluency` or `PolyTope (ROUGE-P)`.
    pub measure: String,
    /// Cells in R-1, R-2, R-L order.
    pub cells: Vec<CorrelationCell<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTable<T> {
    pub rows: Vec<CorrelationRow<T>>,
}

impl<T: Real> CorrelationTable<T> {
    pub fn row(&self, level: &str, measure: &str) -> Option<&CorrelationRow<T>> {
        self.rows.iter().find(|r| r.level == level && r.measure == measure)
    }

    pub fn first_error(&self) -> Option<&'static str> {
        self.rows.iter().flat_map(|r| &r.cells).find_map(|c| c.error)
    }

    pub fn is_all_undefined(&self) -> bool {
        self.rows.iter().flat_map(|r| &r.cells).all(|c| c.value.is_none())
    }
}

/// The system-level PolyTope row from precomputed summaries.
pub fn system_row<T: Real>(summaries: &[SystemSummary<T>]) -> CorrelationRow<T> {
    CorrelationRow {
        level: "System".into(),
        measure: "PolyTope".into(),
        cells: RougeVariant::ALL
            .iter()
            .map(|&v| {
                let pairs: Vec<(T, T)> = summaries.iter().map(|s| (s.rouge(v), s.polytope)).collect();
                system_correlation(&pairs).into()
            })
            .collect(),
    }
}

/// Instance rows (F1 against PolyTope, Accuracy-only and Fluency-only
/// subsets), the system row, and the precision-based instance row.
pub fn correlation_table<T: Real>(
    instances: &[InstanceRecord<T>],
    systems: &[SystemSummary<T>],
) -> CorrelationTable<T> {
    let instance_row = |measure: &str, filter: AspectFilter, precision: bool| CorrelationRow {
        level: "Instance".into(),
        measure: measure.into(),
        cells: RougeVariant::ALL
            .iter()
            .map(|&v| {
                let points: Vec<InstancePoint<T>> = instances
                    .iter()
                    .map(|r| {
                        let prf = r.rouge.get(v);
                        InstancePoint {
                            rouge: if precision { prf.precision } else { prf.f1 },
                            polytope: r.polytope,
                            profile: r.profile,
                        }
                    })
                    .collect();
                instance_correlation(&points, filter).into()
            })
            .collect(),
    };
    CorrelationTable {
        rows: vec![
            instance_row("PolyTope", AspectFilter::All, false),
            instance_row("Accuracy", AspectFilter::AccuracyOnly, false),
            instance_row("Fluency", AspectFilter::FluencyOnly, false),
            system_row(systems),
            instance_row("PolyTope (ROUGE-P)", AspectFilter::All, true),
        ],
    }
}

/// The full table for every system in the corpus, from annotations.
pub fn corpus_correlation_table<T: Real>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    config: &RougeConfig,
    aggregation: Aggregation,
) -> Result<CorrelationTable<T>, AnalysisError> {
    let systems = corpus.system_names();
    let instances = instance_records(corpus, annotations, &systems, config)?;
    let summaries = system_summaries(corpus, annotations, &systems, config, aggregation)?;
    Ok(correlation_table(&instances, &summaries))
}

/// Document key used in agreement tables: `<sample id>/<target>`.
pub fn document_key(sample_id: &str, target: &Target) -> String {
    format!("{sample_id}/{target}")
}

/// Per-document PolyTope scores of one annotator's annotations over the
/// given documents.
pub fn document_scores<T: Real>(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    documents: &[(String, Target)],
) -> Result<BTreeMap<String, T>, ScoreError> {
    documents
        .iter()
        .map(|(sample_id, target)| {
            let text = corpus.text(sample_id, target).ok_or_else(|| ScoreError::MissingOutput {
                sample_id: Some(sample_id.clone()),
                target: target.clone(),
            })?;
            let score =
                score_sample::<T, _>(sample_id, target, annotations.for_target(sample_id, target), word_count(text))?;
            Ok((document_key(sample_id, target), score.score))
        })
        .collect()
}

/// Per annotator: their annotations and the documents they were asked to score.
pub type AnnotatorWork = BTreeMap<String, (AnnotationSet, Vec<(String, Target)>)>;

/// Agreement between annotators, each scored on their own documents.
pub fn annotator_agreement<T: Real>(
    corpus: &Corpus,
    annotators: &AnnotatorWork,
) -> Result<Agreement<T>, AnalysisError> {
    let mut table = BTreeMap::new();
    for (name, (set, documents)) in annotators {
        table.insert(name.clone(), document_scores::<T>(corpus, set, documents)?);
    }
    Ok(inter_annotator_agreement(&table)?)
}

/// Every (sample, target) that carries at least one annotation in any of the
/// given sets, sorted.
pub fn annotated_documents<'a>(sets: impl IntoIterator<Item = &'a AnnotationSet>) -> Vec<(String, Target)> {
    let mut docs: Vec<(String, Target)> =
        sets.into_iter().flat_map(|s| s.iter().map(|a| (a.sample_id.clone(), a.target.clone()))).collect();
    docs.sort();
    docs.dedup();
    docs
}
