//! Pearson correlation at instance and system level, and inter-annotator
//! agreement.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Aspect, ErrorAnnotation};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("{0} series has zero variance")]
    DegenerateSeries(String),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no instance passes the {0:?} filter")]
    EmptyFilter(AspectFilter),
    #[error("need at least two annotators sharing two or more documents")]
    InsufficientOverlap,
}

impl StatsError {
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::TooFewPoints(_) => "TooFewPoints",
            StatsError::DegenerateSeries(_) => "DegenerateSeries",
            StatsError::NonFinite => "NonFinite",
            StatsError::LengthMismatch(..) => "LengthMismatch",
            StatsError::EmptyFilter(_) => "EmptyFilter",
            StatsError::InsufficientOverlap => "InsufficientOverlap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedSeries<T> {
    pub label_x: String,
    pub label_y: String,
    pub points: Vec<(T, T)>,
}

impl<T: Real> PairedSeries<T> {
    pub fn new(label_x: impl Into<String>, label_y: impl Into<String>, points: Vec<(T, T)>) -> Self {
        PairedSeries { label_x: label_x.into(), label_y: label_y.into(), points }
    }

    pub fn from_columns(
        label_x: impl Into<String>,
        label_y: impl Into<String>,
        xs: &[T],
        ys: &[T],
    ) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
        }
        Ok(Self::new(label_x, label_y, xs.iter().copied().zip(ys.iter().copied()).collect()))
    }

    pub fn pearson(&self) -> Result<T, StatsError> {
        correlate(&self.points, &self.label_x, &self.label_y)
    }
}

/// Sample Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson<T: Real>(points: &[(T, T)]) -> Result<T, StatsError> {
    correlate(points, "x", "y")
}

fn correlate<T: Real>(points: &[(T, T)], label_x: &str, label_y: &str) -> Result<T, StatsError> {
    let n = points.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints(n));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (x0, y0) = points[0];
    if points.iter().all(|&(x, _)| x == x0) {
        return Err(StatsError::DegenerateSeries(label_x.to_string()));
    }
    if points.iter().all(|&(_, y)| y == y0) {
        return Err(StatsError::DegenerateSeries(label_y.to_string()));
    }

    let count = T::from_count(n as u64);
    let (sum_x, sum_y) = points.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mean_x, mean_y) = (sum_x / count, sum_y / count);
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    // Two distinct points are always collinear; answer exactly.
    if n == 2 {
        return Ok(sxy.signum());
    }
    // The (n - 1) factors of covariance and both deviations cancel.
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// One point per system: (ROUGE value, PolyTope score).
pub fn system_correlation<T: Real>(pairs: &[(T, T)]) -> Result<T, StatsError> {
    correlate(pairs, "ROUGE", "PolyTope")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AspectFilter {
    #[default]
    All,
    /// Instances with at least one Accuracy error and no Fluency errors.
    AccuracyOnly,
    /// Instances with at least one Fluency error and no Accuracy errors.
    FluencyOnly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorProfile {
    pub accuracy: u64,
    pub fluency: u64,
}

impl ErrorProfile {
    pub fn from_annotations<'a>(annotations: impl IntoIterator<Item = &'a ErrorAnnotation>) -> Self {
        let mut profile = ErrorProfile::default();
        for a in annotations {
            match a.issue_type.aspect() {
                Aspect::Accuracy => profile.accuracy += 1,
                Aspect::Fluency => profile.fluency += 1,
            }
        }
        profile
    }

    pub fn passes(&self, filter: AspectFilter) -> bool {
        match filter {
            AspectFilter::All => true,
            AspectFilter::AccuracyOnly => self.accuracy > 0 && self.fluency == 0,
            AspectFilter::FluencyOnly => self.fluency > 0 && self.accuracy == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstancePoint<T> {
    pub rouge: T,
    pub polytope: T,
    pub profile: ErrorProfile,
}

pub fn instance_correlation<T: Real>(points: &[InstancePoint<T>], filter: AspectFilter) -> Result<T, StatsError> {
    let pairs: Vec<(T, T)> =
        points.iter().filter(|p| p.profile.passes(filter)).map(|p| (p.rouge, p.polytope)).collect();
    if pairs.is_empty() {
        return Err(StatsError::EmptyFilter(filter));
    }
    correlate(&pairs, "ROUGE", "PolyTope")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairAgreement<T> {
    pub annotator_a: String,
    pub annotator_b: String,
    pub common_documents: usize,
    pub pearson: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement<T> {
    /// Unweighted mean of the pairwise coefficients.
    pub mean: T,
    pub pairs: Vec<PairAgreement<T>>,
}

/// Mean pairwise Pearson correlation of per-document scores. Pairs sharing
/// fewer than two documents are skipped.
pub fn inter_annotator_agreement<T: Real>(
    scores: &BTreeMap<String, BTreeMap<String, T>>,
) -> Result<Agreement<T>, StatsError> {
    let annotators: Vec<(&String, &BTreeMap<String, T>)> = scores.iter().collect();
    let mut pairs = Vec::new();
    for (i, (name_a, docs_a)) in annotators.iter().enumerate() {
        for (name_b, docs_b) in &annotators[i + 1..] {
            let common: Vec<(T, T)> = docs_a.iter().filter_map(|(doc, &a)| docs_b.get(doc).map(|&b| (a, b))).collect();
            if common.len() < 2 {
                continue;
            }
            let r = correlate(&common, name_a, name_b)?;
            pairs.push(PairAgreement {
                annotator_a: (*name_a).clone(),
                annotator_b: (*name_b).clone(),
                common_documents: common.len(),
                pearson: r,
            });
        }
    }
    if pairs.is_empty() {
        return Err(StatsError::InsufficientOverlap);
    }
    let sum = pairs.iter().fold(T::zero(), |acc, p| acc + p.pearson);
    Ok(Agreement { mean: sum / T::from_count(pairs.len() as u64), pairs })
}
