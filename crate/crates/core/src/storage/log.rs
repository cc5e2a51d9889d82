use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{records, StorageError};
use crate::model::{validate_annotation, AnnotationSet, Corpus, ErrorAnnotation, ValidationError};
use crate::scoring::SeverityMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tombstone {
    pub deleted: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<DateTime<Utc>>,
}

/// One line of an annotation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum LogRecord {
    Create(ErrorAnnotation),
    Delete(Tombstone),
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("log record serializes");
        line.push('\n');
        line
    }
}

pub fn read_log_records<R: BufRead>(reader: R) -> Result<Vec<(usize, LogRecord)>, StorageError> {
    records(reader)
        .map(|r| {
            let (line, text) = r.map_err(|e| StorageError::io("<annotation log>", e))?;
            let record =
                serde_json::from_str(&text).map_err(|e| StorageError::Parse { line, message: e.to_string() })?;
            Ok((line, record))
        })
        .collect()
}

/// Rebuilds the current annotation set from a log, re-validating every
/// creation against the corpus and matrix.
pub fn replay_annotations<R: BufRead>(
    reader: R,
    corpus: &Corpus,
    matrix: &SeverityMatrix,
) -> Result<AnnotationSet, StorageError> {
    let mut set = AnnotationSet::new();
    replay_annotations_into(&mut set, reader, corpus, matrix)?;
    Ok(set)
}

/// Replays a log on top of an existing set, e.g. to merge per-annotator logs.
pub fn replay_annotations_into<R: BufRead>(
    set: &mut AnnotationSet,
    reader: R,
    corpus: &Corpus,
    matrix: &SeverityMatrix,
) -> Result<(), StorageError> {
    for (line, record) in read_log_records(reader)? {
        match record {
            LogRecord::Create(stored) => {
                let validation = |source| StorageError::Validation { line, source };
                let sample = corpus
                    .get(&stored.sample_id)
                    .ok_or_else(|| validation(ValidationError::UnknownSample(stored.sample_id.clone())))?;
                let derived = validate_annotation(stored.candidate(), sample, matrix).map_err(validation)?;
                if derived.severity != stored.severity {
                    return Err(StorageError::SeverityMismatch {
                        line,
                        id: stored.id,
                        stored: stored.severity,
                        derived: derived.severity,
                    });
                }
                set.insert(derived).map_err(validation)?;
            }
            LogRecord::Delete(tombstone) => {
                if set.remove(&tombstone.deleted).is_none() {
                    return Err(StorageError::OrphanTombstone { line, id: tombstone.deleted });
                }
            }
        }
    }
    Ok(())
}

pub fn replay_annotation_file(
    path: impl AsRef<Path>,
    corpus: &Corpus,
    matrix: &SeverityMatrix,
) -> Result<AnnotationSet, StorageError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| StorageError::io(path, e))?;
    replay_annotations(BufReader::new(file), corpus, matrix).map_err(|e| match e {
        StorageError::Io { source, .. } => StorageError::io(path, source),
        other => other,
    })
}

/// Compacted log: one creation per live annotation, in insertion order.
pub fn serialize_annotation_set(set: &AnnotationSet) -> String {
    set.iter().map(|a| LogRecord::Create(a.clone()).to_line()).collect()
}

/// Append-only writer. Each record is written as one line and synced before
/// `append` returns.
#[derive(Debug)]
pub struct AnnotationLogWriter {
    path: PathBuf,
    file: File,
}

impl AnnotationLogWriter {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let path = path.into();
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| StorageError::io(&path, e))?;
        Ok(AnnotationLogWriter { path, file })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &LogRecord) -> Result<(), StorageError> {
        let line = record.to_line();
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| StorageError::io(&self.path, e))
    }
}
