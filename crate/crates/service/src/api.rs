//! Routes under `/v1`. The caller identifies itself with `X-Annotator`.

use std::collections::BTreeMap;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use polytope_core::analysis::{
    annotated_documents, annotator_agreement, corpus_correlation_table, system_row, AnalysisError, CorrelationRow,
};
use polytope_core::scoring::build_all_reports;
use polytope_core::stats::StatsError;
use polytope_core::storage::{export_report, ExportFormat, ExportOptions};
use polytope_core::{
    Aggregation, AnnotationSet, ErrorAnnotation, IssueType, RougeConfig, RougeVariant, SampleScore, Severity, Span,
    SyntacticLabel, SystemReport, SystemSummary, Target,
};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::session::{valid_annotator_id, Session};
use crate::state::{AppState, NewError};

pub const ANNOTATOR_HEADER: &str = "x-annotator";

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/tasks", get(list_tasks))
        .route("/v1/tasks/{sample_id}/{target}/complete", post(complete_task))
        .route("/v1/samples/{sample_id}/{target}", get(get_sample))
        .route("/v1/errors", post(post_error))
        .route("/v1/errors/{id}", delete(delete_error))
        .route("/v1/reports", get(get_reports))
        .route("/v1/agreement", get(get_agreement))
        .route("/v1/correlation", get(get_correlation))
        .route("/v1/correlation/system-level", post(post_system_correlation))
        .with_state(state)
}

fn annotator_header(headers: &HeaderMap) -> Result<Option<String>, ApiError> {
    let Some(value) = headers.get(ANNOTATOR_HEADER) else { return Ok(None) };
    let id = value.to_str().map_err(|_| ApiError::invalid_annotator("<non-ascii>"))?.trim();
    if !valid_annotator_id(id) {
        return Err(ApiError::invalid_annotator(id));
    }
    Ok(Some(id.to_string()))
}

fn require_session(state: &AppState, headers: &HeaderMap) -> Result<Session, ApiError> {
    let annotator = annotator_header(headers)?.ok_or_else(ApiError::missing_annotator)?;
    state.session(&annotator).ok_or_else(|| ApiError::unknown_annotator(&annotator))
}

/// Session of the caller if it sent a header; reports are aliased for blind
/// sessions and shown raw otherwise.
fn optional_session(state: &AppState, headers: &HeaderMap) -> Result<Option<Session>, ApiError> {
    match annotator_header(headers)? {
        Some(annotator) => state.session(&annotator).map(Some).ok_or_else(|| ApiError::unknown_annotator(&annotator)),
        None => Ok(None),
    }
}

/// Resolves `(sample, target)` for the session: unknown sample, then unknown
/// target, then assignment.
fn resolve_task(state: &AppState, session: &Session, sample_id: &str, shown: &str) -> Result<Target, ApiError> {
    let sample = state.corpus().get(sample_id).ok_or_else(|| ApiError::unknown_sample(sample_id))?;
    // a blind client's unrecognized input may be a raw name; never echo it
    let target = session
        .resolve_target(shown)
        .ok_or_else(|| ApiError::unknown_target(sample_id, if session.blind { "<unrecognized>" } else { shown }))?;
    if sample.text(&target).is_none() {
        return Err(ApiError::unknown_target(sample_id, shown));
    }
    if !session.is_assigned(sample_id, &target) {
        return Err(ApiError::not_assigned(sample_id, shown));
    }
    Ok(target)
}

#[derive(Debug, Serialize)]
struct TaskView {
    sample_id: String,
    target: String,
}

#[derive(Debug, Serialize)]
struct TasksResponse {
    annotator: String,
    blind: bool,
    total: usize,
    completed: usize,
    /// Remaining tasks in queue order.
    tasks: Vec<TaskView>,
}

fn tasks_response(state: &AppState, session: &Session) -> TasksResponse {
    let pending: Vec<TaskView> = session
        .tasks
        .iter()
        .filter(|t| !state.is_completed(&session.annotator, &t.sample_id, &t.target))
        .map(|t| TaskView { sample_id: t.sample_id.clone(), target: session.display_target(&t.target) })
        .collect();
    TasksResponse {
        annotator: session.annotator.clone(),
        blind: session.blind,
        total: session.tasks.len(),
        completed: session.tasks.len() - pending.len(),
        tasks: pending,
    }
}

async fn list_tasks(State(state): State<AppState>, headers: HeaderMap) -> Result<Json<TasksResponse>, ApiError> {
    let session = require_session(&state, &headers)?;
    Ok(Json(tasks_response(&state, &session)))
}

async fn complete_task(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path((sample_id, shown)): Path<(String, String)>,
) -> Result<Json<TasksResponse>, ApiError> {
    let session = require_session(&state, &headers)?;
    let target = resolve_task(&state, &session, &sample_id, &shown)?;
    state.complete_task(&session.annotator, &sample_id, &target)?;
    Ok(Json(tasks_response(&state, &session)))
}

#[derive(Debug, Serialize)]
struct ScoreView {
    word_count: u64,
    critical: u64,
    major: u64,
    minor: u64,
    errors: u64,
    weighted_deduction: u64,
    score: f64,
}

impl From<&SampleScore> for ScoreView {
    fn from(s: &SampleScore) -> Self {
        ScoreView {
            word_count: s.word_count,
            critical: s.counts.critical,
            major: s.counts.major,
            minor: s.counts.minor,
            errors: s.counts.total(),
            weighted_deduction: s.weighted_deduction,
            score: s.score,
        }
    }
}

#[derive(Debug, Serialize)]
struct AnnotationView {
    id: String,
    sample_id: String,
    target: String,
    span: Span,
    issue_type: IssueType,
    syntactic_label: SyntacticLabel,
    severity: Severity,
    annotator: String,
    created_at: DateTime<Utc>,
}

impl AnnotationView {
    fn new(a: &ErrorAnnotation, session: &Session) -> Self {
        AnnotationView {
            id: a.id.clone(),
            sample_id: a.sample_id.clone(),
            target: session.display_target(&a.target),
            span: a.span,
            issue_type: a.issue_type,
            syntactic_label: a.syntactic_label,
            severity: a.severity,
            annotator: a.annotator.clone(),
            created_at: a.created_at,
        }
    }
}

#[derive(Debug, Serialize)]
struct SampleResponse {
    sample_id: String,
    target: String,
    source: String,
    text: String,
    completed: bool,
    annotations: Vec<AnnotationView>,
    score: ScoreView,
}

async fn get_sample(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path((sample_id, shown)): Path<(String, String)>,
) -> Result<Json<SampleResponse>, ApiError> {
    let session = require_session(&state, &headers)?;
    let target = resolve_task(&state, &session, &sample_id, &shown)?;
    let sample = state.corpus().get(&sample_id).expect("resolved above");
    let score = state.running_score(&session.annotator, &sample_id, &target)?;
    let annotations = state
        .own_annotations(&session.annotator, &sample_id, &target)
        .iter()
        .map(|a| AnnotationView::new(a, &session))
        .collect();
    Ok(Json(SampleResponse {
        sample_id: sample_id.clone(),
        target: session.display_target(&target),
        source: sample.source.clone(),
        text: sample.text(&target).expect("resolved above").to_string(),
        completed: state.is_completed(&session.annotator, &sample_id, &target),
        annotations,
        score: ScoreView::from(&score),
    }))
}

#[derive(Debug, Deserialize)]
struct PostErrorBody {
    sample_id: String,
    target: String,
    span: Span,
    issue_type: String,
    syntactic_label: String,
}

#[derive(Debug, Serialize)]
struct MutationResponse {
    annotation: AnnotationView,
    score: ScoreView,
}

async fn post_error(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<PostErrorBody>, JsonRejection>,
) -> Result<(StatusCode, Json<MutationResponse>), ApiError> {
    let session = require_session(&state, &headers)?;
    let Json(body) = body.map_err(|e| ApiError::invalid_payload(e.body_text()))?;
    let issue_type: IssueType = body
        .issue_type
        .parse()
        .map_err(|e: polytope_core::model::UnknownName| ApiError::unprocessable("UnknownIssueType", e.to_string()))?;
    let syntactic_label: SyntacticLabel =
        body.syntactic_label.parse().map_err(|e: polytope_core::model::UnknownName| {
            ApiError::unprocessable("UnknownSyntacticLabel", e.to_string())
        })?;
    let target = resolve_task(&state, &session, &body.sample_id, &body.target)?;
    let new = NewError { sample_id: body.sample_id, target, span: body.span, issue_type, syntactic_label };
    let (annotation, score) = state.create(&session.annotator, new)?;
    Ok((
        StatusCode::CREATED,
        Json(MutationResponse {
            annotation: AnnotationView::new(&annotation, &session),
            score: ScoreView::from(&score),
        }),
    ))
}

async fn delete_error(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<String>,
) -> Result<Json<MutationResponse>, ApiError> {
    let session = require_session(&state, &headers)?;
    let (removed, score) = state.delete(&session.annotator, &id)?;
    Ok(Json(MutationResponse { annotation: AnnotationView::new(&removed, &session), score: ScoreView::from(&score) }))
}

#[derive(Debug, Deserialize, Default)]
struct ReportQuery {
    aggregation: Option<String>,
    /// Restrict to one annotator's annotations.
    annotator: Option<String>,
    /// `json` (default), `table` or `delimited`.
    format: Option<String>,
    precision: Option<usize>,
}

#[derive(Debug, Serialize)]
struct IssueCount {
    issue_type: IssueType,
    count: u64,
}

#[derive(Debug, Serialize)]
struct SeverityView {
    critical: u64,
    major: u64,
    minor: u64,
}

#[derive(Debug, Serialize)]
struct ReportView {
    system: String,
    samples: usize,
    issue_counts: Vec<IssueCount>,
    severity_counts: SeverityView,
    total_errors: u64,
    total_words: u64,
    errors_per_1k_words: f64,
    macro_score: f64,
    micro_score: f64,
    score: f64,
}

#[derive(Debug, Serialize)]
struct ReportsResponse {
    aggregation: Aggregation,
    reports: Vec<ReportView>,
}

fn parse_aggregation(text: Option<&str>) -> Result<Aggregation, ApiError> {
    text.map(str::parse).transpose().map_err(|e: String| ApiError::invalid_payload(e)).map(Option::unwrap_or_default)
}

fn filtered(set: AnnotationSet, annotator: Option<&str>) -> AnnotationSet {
    match annotator {
        Some(a) => set.by_annotator(a),
        None => set,
    }
}

async fn get_reports(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let viewer = optional_session(&state, &headers)?;
    let aggregation = parse_aggregation(query.aggregation.as_deref())?;
    let set = filtered(state.annotations(), query.annotator.as_deref());
    let mut reports: Vec<SystemReport> =
        build_all_reports(state.corpus(), &set).map_err(|e| ApiError::unprocessable("MissingOutput", e.to_string()))?;
    if let Some(session) = &viewer {
        for r in &mut reports {
            r.system = session.display_system(&r.system);
        }
        reports.sort_by(|a, b| a.system.cmp(&b.system));
    }

    let format = match query.format.as_deref() {
        None | Some("json") => None,
        Some(other) => Some(other.parse::<ExportFormat>().map_err(ApiError::invalid_payload)?),
    };
    if let Some(format) = format {
        let options = ExportOptions { format, precision: query.precision.unwrap_or(2), aggregation: Some(aggregation) };
        let body = export_report(&reports, &options);
        let content_type = match format {
            ExportFormat::Table => "text/plain; charset=utf-8",
            ExportFormat::Delimited => "text/csv; charset=utf-8",
        };
        return Ok(([(header::CONTENT_TYPE, content_type)], body).into_response());
    }

    let reports = reports
        .iter()
        .map(|r| ReportView {
            system: r.system.clone(),
            samples: r.samples.len(),
            issue_counts: r.issue_counts.iter().map(|&(issue_type, count)| IssueCount { issue_type, count }).collect(),
            severity_counts: SeverityView {
                critical: r.severity_counts.critical,
                major: r.severity_counts.major,
                minor: r.severity_counts.minor,
            },
            total_errors: r.total_errors,
            total_words: r.total_words,
            errors_per_1k_words: r.errors_per_1k_words,
            macro_score: r.macro_score,
            micro_score: r.micro_score,
            score: r.score(aggregation),
        })
        .collect();
    Ok(Json(ReportsResponse { aggregation, reports }).into_response())
}

fn analysis_error(e: AnalysisError) -> ApiError {
    match e {
        AnalysisError::Stats(s) => stats_error(s),
        other => ApiError::unprocessable("AnalysisError", other.to_string()),
    }
}

fn stats_error(e: StatsError) -> ApiError {
    ApiError::unprocessable(e.code(), e.to_string())
}

#[derive(Debug, Serialize)]
struct PairView {
    annotator_a: String,
    annotator_b: String,
    documents: usize,
    pearson: f64,
}

#[derive(Debug, Serialize)]
struct AgreementResponse {
    mean: f64,
    annotators: usize,
    pairs: Vec<PairView>,
}

async fn get_agreement(State(state): State<AppState>) -> Result<Json<AgreementResponse>, ApiError> {
    let set = state.annotations();
    let shared = annotated_documents([&set]);
    let mut per_annotator = BTreeMap::new();
    let names: Vec<String> = match state.sessions() {
        crate::session::Sessions::Manifest(map) => map.keys().cloned().collect(),
        crate::session::Sessions::Open { .. } => set.annotators().into_iter().map(str::to_string).collect(),
    };
    for name in names {
        let documents = state.sessions().documents(&name).unwrap_or_else(|| shared.clone());
        per_annotator.insert(name.clone(), (set.by_annotator(&name), documents));
    }
    let agreement = annotator_agreement::<f64>(state.corpus(), &per_annotator).map_err(analysis_error)?;
    Ok(Json(AgreementResponse {
        mean: agreement.mean,
        annotators: per_annotator.len(),
        pairs: agreement
            .pairs
            .into_iter()
            .map(|p| PairView {
                annotator_a: p.annotator_a,
                annotator_b: p.annotator_b,
                documents: p.common_documents,
                pearson: p.pearson,
            })
            .collect(),
    }))
}

#[derive(Debug, Serialize)]
struct CellView {
    variant: &'static str,
    value: Option<f64>,
    error: Option<&'static str>,
}

#[derive(Debug, Serialize)]
struct RowView {
    level: String,
    measure: String,
    cells: Vec<CellView>,
}

impl From<CorrelationRow<f64>> for RowView {
    fn from(row: CorrelationRow<f64>) -> Self {
        RowView {
            level: row.level,
            measure: row.measure,
            cells: RougeVariant::ALL
                .iter()
                .zip(row.cells)
                .map(|(v, c)| CellView { variant: v.label(), value: c.value, error: c.error })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct CorrelationResponse {
    aggregation: Aggregation,
    rows: Vec<RowView>,
}

#[derive(Debug, Deserialize, Default)]
struct CorrelationQuery {
    aggregation: Option<String>,
}

async fn get_correlation(
    State(state): State<AppState>,
    Query(query): Query<CorrelationQuery>,
) -> Result<Json<CorrelationResponse>, ApiError> {
    let aggregation = parse_aggregation(query.aggregation.as_deref())?;
    let table =
        corpus_correlation_table::<f64>(state.corpus(), &state.annotations(), &RougeConfig::default(), aggregation)
            .map_err(analysis_error)?;
    if table.is_all_undefined() {
        let code = table.first_error().unwrap_or("DegenerateSeries");
        return Err(ApiError::unprocessable(code, "no correlation coefficient is defined for the current annotations"));
    }
    Ok(Json(CorrelationResponse { aggregation, rows: table.rows.into_iter().map(RowView::from).collect() }))
}

#[derive(Debug, Deserialize)]
struct SystemLevelBody {
    systems: Vec<SystemSummary>,
}

#[derive(Debug, Serialize)]
struct SystemLevelResponse {
    systems: usize,
    row: RowView,
}

/// System-level row from caller-supplied per-system scores.
async fn post_system_correlation(
    body: Result<Json<SystemLevelBody>, JsonRejection>,
) -> Result<Json<SystemLevelResponse>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::invalid_payload(e.body_text()))?;
    let row = system_row(&body.systems);
    if row.cells.iter().all(|c| c.value.is_none()) {
        let code = row.cells[0].error.unwrap_or("DegenerateSeries");
        let message = format!("system-level correlation undefined over {} systems", body.systems.len());
        return Err(ApiError::unprocessable(code, message));
    }
    Ok(Json(SystemLevelResponse { systems: body.systems.len(), row: row.into() }))
}
