//! Replayed in-memory state and serialized per-annotator writes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::Utc;
use polytope_core::scoring::{score_sample, word_count};
use polytope_core::storage::{load_corpus, replay_annotations_into, AnnotationLogWriter, LogRecord, Tombstone};
use polytope_core::{
    AnnotationCandidate, AnnotationSet, Corpus, ErrorAnnotation, IssueType, SampleScore, SeverityMatrix, Span,
    StorageError, SyntacticLabel, Target,
};
use serde::{Deserialize, Serialize};

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::session::{ManifestError, Session, Sessions};

const LOG_SUFFIX: &str = ".jsonl";
const PROGRESS_SUFFIX: &str = ".progress.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{}: {message}", .path.display())]
    Progress { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ProgressRecord {
    sample_id: String,
    target: Target,
}

/// One annotator's append-only files. Holding the mutex is what serializes
/// that annotator's writes.
#[derive(Debug)]
struct AnnotatorFiles {
    log: AnnotationLogWriter,
    progress_path: PathBuf,
}

#[derive(Debug)]
struct Inner {
    corpus: Corpus,
    matrix: SeverityMatrix,
    sessions: Sessions,
    log_dir: PathBuf,
    annotations: RwLock<AnnotationSet>,
    completed: RwLock<BTreeMap<String, BTreeSet<(String, Target)>>>,
    writers: Mutex<BTreeMap<String, Arc<Mutex<AnnotatorFiles>>>>,
}

/// Shared service state; cheap to clone.
#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

/// Validated fields of a new error, with the target already resolved.
#[derive(Debug, Clone)]
pub struct NewError {
    pub sample_id: String,
    pub target: Target,
    pub span: Span,
    pub issue_type: IssueType,
    pub syntactic_label: SyntacticLabel,
}

fn annotator_of(path: &Path, suffix: &str) -> Option<String> {
    let name = path.file_name()?.to_str()?;
    name.strip_suffix(suffix).map(str::to_string)
}

impl AppState {
    /// Loads the corpus and manifest and replays every log in `log_dir`.
    pub fn load(config: &ServiceConfig) -> Result<Self, StartupError> {
        let corpus = load_corpus(&config.corpus_path)?;
        let sessions = match &config.manifest_path {
            Some(path) => Sessions::load(path, &corpus, config.blind)?,
            None => Sessions::open(config.blind),
        };
        Self::from_parts(corpus, sessions, config.log_dir.clone())
    }

    pub fn from_parts(corpus: Corpus, sessions: Sessions, log_dir: PathBuf) -> Result<Self, StartupError> {
        std::fs::create_dir_all(&log_dir).map_err(|e| StorageError::io(&log_dir, e))?;
        let matrix = SeverityMatrix::builtin().clone();
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&log_dir)
            .map_err(|e| StorageError::io(&log_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();

        let mut annotations = AnnotationSet::new();
        let mut completed: BTreeMap<String, BTreeSet<(String, Target)>> = BTreeMap::new();
        for path in &entries {
            if let Some(annotator) = annotator_of(path, PROGRESS_SUFFIX) {
                let file = std::fs::File::open(path).map_err(|e| StorageError::io(path, e))?;
                let done = completed.entry(annotator).or_default();
                for line in BufReader::new(file).lines() {
                    let line = line.map_err(|e| StorageError::io(path, e))?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record: ProgressRecord = serde_json::from_str(&line)
                        .map_err(|e| StartupError::Progress { path: path.clone(), message: e.to_string() })?;
                    done.insert((record.sample_id, record.target));
                }
            } else if annotator_of(path, LOG_SUFFIX).is_some() {
                let file = std::fs::File::open(path).map_err(|e| StorageError::io(path, e))?;
                replay_annotations_into(&mut annotations, BufReader::new(file), &corpus, &matrix).map_err(
                    |e| match e {
                        StorageError::Io { source, .. } => StorageError::io(path, source),
                        other => other,
                    },
                )?;
            }
        }
        tracing::info!(annotations = annotations.len(), logs = entries.len(), "replayed annotation logs");

        Ok(AppState {
            inner: Arc::new(Inner {
                corpus,
                matrix,
                sessions,
                log_dir,
                annotations: RwLock::new(annotations),
                completed: RwLock::new(completed),
                writers: Mutex::new(BTreeMap::new()),
            }),
        })
    }

    pub fn corpus(&self) -> &Corpus {
        &self.inner.corpus
    }

    pub fn sessions(&self) -> &Sessions {
        &self.inner.sessions
    }

    pub fn session(&self, annotator: &str) -> Option<Session> {
        self.inner.sessions.session(annotator, &self.inner.corpus)
    }

    /// Snapshot of the live annotations.
    pub fn annotations(&self) -> AnnotationSet {
        self.inner.annotations.read().expect("annotation lock").clone()
    }

    pub fn log_path(&self, annotator: &str) -> PathBuf {
        self.inner.log_dir.join(format!("{annotator}{LOG_SUFFIX}"))
    }

    fn files(&self, annotator: &str) -> Result<Arc<Mutex<AnnotatorFiles>>, StorageError> {
        let mut writers = self.inner.writers.lock().expect("writer table lock");
        if let Some(files) = writers.get(annotator) {
            return Ok(files.clone());
        }
        let files = Arc::new(Mutex::new(AnnotatorFiles {
            log: AnnotationLogWriter::open(self.log_path(annotator))?,
            progress_path: self.inner.log_dir.join(format!("{annotator}{PROGRESS_SUFFIX}")),
        }));
        writers.insert(annotator.to_string(), files.clone());
        Ok(files)
    }

    pub fn is_completed(&self, annotator: &str, sample_id: &str, target: &Target) -> bool {
        self.inner
            .completed
            .read()
            .expect("progress lock")
            .get(annotator)
            .is_some_and(|done| done.contains(&(sample_id.to_string(), target.clone())))
    }

    pub fn complete_task(&self, annotator: &str, sample_id: &str, target: &Target) -> Result<(), StorageError> {
        if self.is_completed(annotator, sample_id, target) {
            return Ok(());
        }
        let files = self.files(annotator)?;
        let files = files.lock().expect("annotator lock");
        let record = ProgressRecord { sample_id: sample_id.to_string(), target: target.clone() };
        let mut line = serde_json::to_string(&record).expect("progress record serializes");
        line.push('\n');
        let path = &files.progress_path;
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(line.as_bytes()).and_then(|_| f.sync_data()))
            .map_err(|e| StorageError::io(path, e))?;
        self.inner
            .completed
            .write()
            .expect("progress lock")
            .entry(annotator.to_string())
            .or_default()
            .insert((record.sample_id, record.target));
        Ok(())
    }

    /// Running score of one annotator's annotations on one text.
    pub fn running_score(&self, annotator: &str, sample_id: &str, target: &Target) -> Result<SampleScore, ApiError> {
        let set = self.inner.annotations.read().expect("annotation lock");
        self.score_locked(&set, annotator, sample_id, target)
    }

    fn score_locked(
        &self,
        set: &AnnotationSet,
        annotator: &str,
        sample_id: &str,
        target: &Target,
    ) -> Result<SampleScore, ApiError> {
        let text = self
            .inner
            .corpus
            .text(sample_id, target)
            .ok_or_else(|| ApiError::internal("scored text disappeared from the corpus"))?;
        let own = set.for_target(sample_id, target).filter(|a| a.annotator == annotator);
        score_sample(sample_id, target, own, word_count(text))
            .map_err(|e| ApiError::unprocessable("ZeroWordCount", e.to_string()))
    }

    /// Annotations of one annotator on one text, in insertion order.
    pub fn own_annotations(&self, annotator: &str, sample_id: &str, target: &Target) -> Vec<ErrorAnnotation> {
        let set = self.inner.annotations.read().expect("annotation lock");
        set.for_target(sample_id, target).filter(|a| a.annotator == annotator).cloned().collect()
    }

    /// Validates, appends to the annotator's log, then publishes. Returns the
    /// stored annotation and the score including it.
    pub fn create(&self, annotator: &str, new: NewError) -> Result<(ErrorAnnotation, SampleScore), ApiError> {
        let sample = self.inner.corpus.get(&new.sample_id).ok_or_else(|| ApiError::unknown_sample(&new.sample_id))?;
        let candidate = AnnotationCandidate {
            id: uuid::Uuid::new_v4().to_string(),
            sample_id: new.sample_id,
            target: new.target,
            span: new.span,
            issue_type: new.issue_type,
            syntactic_label: new.syntactic_label,
            annotator: annotator.to_string(),
            created_at: Utc::now(),
        };
        let annotation = polytope_core::validate_annotation(candidate, sample, &self.inner.matrix)?;

        let files = self.files(annotator)?;
        let mut files = files.lock().expect("annotator lock");
        // Only this annotator's writes can conflict, and they hold `files`.
        self.inner.annotations.read().expect("annotation lock").check_insert(&annotation)?;
        files.log.append(&LogRecord::Create(annotation.clone()))?;
        let mut set = self.inner.annotations.write().expect("annotation lock");
        set.insert(annotation.clone())?;
        let score = self.score_locked(&set, annotator, &annotation.sample_id, &annotation.target)?;
        Ok((annotation, score))
    }

    /// Appends a tombstone and returns the removed annotation with the
    /// updated score of its text.
    pub fn delete(&self, annotator: &str, id: &str) -> Result<(ErrorAnnotation, SampleScore), ApiError> {
        let owner = {
            let set = self.inner.annotations.read().expect("annotation lock");
            set.get(id).map(|a| a.annotator.clone()).ok_or_else(|| ApiError::not_found(id))?
        };
        if owner != annotator {
            return Err(ApiError::not_owner(id));
        }
        let files = self.files(annotator)?;
        let mut files = files.lock().expect("annotator lock");
        if self.inner.annotations.read().expect("annotation lock").get(id).is_none() {
            return Err(ApiError::not_found(id));
        }
        files.log.append(&LogRecord::Delete(Tombstone {
            deleted: id.to_string(),
            annotator: Some(annotator.to_string()),
            at: Some(Utc::now()),
        }))?;
        let mut set = self.inner.annotations.write().expect("annotation lock");
        let removed = set.remove(id).ok_or_else(|| ApiError::not_found(id))?;
        let score = self.score_locked(&set, annotator, &removed.sample_id, &removed.target)?;
        Ok((removed, score))
    }
}
