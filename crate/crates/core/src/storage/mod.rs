//! Corpus and annotation-log persistence, and deterministic report export.
//!
//! Both file formats are UTF-8 JSON Lines: one record per `\n`-terminated
//! line. Blank lines are ignored; line numbers in errors are 1-based physical
//! line numbers.

mod corpus;
mod export;
mod log;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::{CorpusError, Severity, ValidationError};

pub use corpus::{load_corpus, read_corpus, serialize_corpus, write_corpus};
pub use export::{
    export_agreement, export_correlation, export_distribution, export_report, export_rouge, export_sample_scores,
    export_system_correlation, format_number, ExportFormat, ExportOptions, Grid,
};
pub use log::{
    read_log_records, replay_annotation_file, replay_annotations, replay_annotations_into, serialize_annotation_set,
    AnnotationLogWriter, LogRecord, Tombstone,
};

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Corpus {
        line: usize,
        #[source]
        source: CorpusError,
    },
    #[error("line {line}: {source}")]
    Validation {
        line: usize,
        #[source]
        source: ValidationError,
    },
    #[error("line {line}: annotation {id:?} stored as {stored} but the matrix derives {derived}")]
    SeverityMismatch { line: usize, id: String, stored: Severity, derived: Severity },
    #[error("line {line}: tombstone for {id:?} does not follow a live creation")]
    OrphanTombstone { line: usize, id: String },
}

impl StorageError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        StorageError::Io { path: path.into(), source }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            StorageError::Io { .. } => "Io",
            StorageError::Parse { .. } => "ParseError",
            StorageError::Corpus { source, .. } => match source {
                CorpusError::DuplicateId(_) => "DuplicateId",
                CorpusError::EmptySource(_) => "EmptySource",
                CorpusError::EmptyId => "EmptyId",
            },
            StorageError::Validation { source, .. } => source.code(),
            StorageError::SeverityMismatch { .. } => "SeverityMismatch",
            StorageError::OrphanTombstone { .. } => "OrphanTombstone",
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            StorageError::Io { .. } => None,
            StorageError::Parse { line, .. }
            | StorageError::Corpus { line, .. }
            | StorageError::Validation { line, .. }
            | StorageError::SeverityMismatch { line, .. }
            | StorageError::OrphanTombstone { line, .. } => Some(*line),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, StorageError::Io { .. })
    }
}

/// Non-blank lines with their 1-based line numbers.
fn records<R: io::BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), io::Error>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty()))
}
