use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{records, StorageError};
use crate::model::{Corpus, Sample};

pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, StorageError> {
    let mut corpus = Corpus::default();
    for record in records(reader) {
        let (line, text) = record.map_err(|e| StorageError::io("<corpus>", e))?;
        let sample: Sample =
            serde_json::from_str(&text).map_err(|e| StorageError::Parse { line, message: e.to_string() })?;
        corpus.push(sample).map_err(|source| StorageError::Corpus { line, source })?;
    }
    Ok(corpus)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, StorageError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| StorageError::io(path, e))?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        StorageError::Io { source, .. } => StorageError::io(path, source),
        other => other,
    })
}

/// Canonical form: one compact JSON object per line, fields in declaration
/// order, system outputs sorted by name.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sample in corpus.samples() {
        out.push_str(&serde_json::to_string(sample).expect("sample serializes"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), StorageError> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| StorageError::io(path, e))?;
    file.write_all(serialize_corpus(corpus).as_bytes()).map_err(|e| StorageError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CorpusError;

    #[test]
    fn empty_input() {
        assert!(read_corpus("".as_bytes()).unwrap().is_empty());
        assert!(read_corpus("\n  \n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_reports_line() {
        let text = "{\"id\":\"a\",\"source\":\"S.\",\"reference\":\"R.\"}\n{\"id\":\"a\",\"source\":\"T.\",\"reference\":\"R.\"}\n";
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(2));
        assert_eq!(err.code(), "DuplicateId");
        assert!(matches!(err, StorageError::Corpus { source: CorpusError::DuplicateId(_), .. }));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "\n{\"id\":\"a\",\"source\":\"S.\",\"reference\":\"R.\"}\n{not json\n";
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert_eq!(err.line(), Some(3));
        assert_eq!(err.code(), "ParseError");
    }

    #[test]
    fn canonical_round_trip() {
        let text =
            "{\"reference\":\"R.\",\"id\":\"a\",\"system_outputs\":{\"z\":\"Z.\",\"b\":\"B.\"},\"source\":\"S.\"}\n\n";
        let corpus = read_corpus(text.as_bytes()).unwrap();
        let canonical = serialize_corpus(&corpus);
        assert_eq!(
            canonical,
            "{\"id\":\"a\",\"source\":\"S.\",\"reference\":\"R.\",\"system_outputs\":{\"b\":\"B.\",\"z\":\"Z.\"}}\n"
        );
        let again = read_corpus(canonical.as_bytes()).unwrap();
        assert_eq!(again, corpus);
        assert_eq!(serialize_corpus(&again), canonical);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let corpus = read_corpus("{\"id\":\"a\",\"source\":\"S é.\",\"reference\":\"R.\"}".as_bytes()).unwrap();
        write_corpus(&corpus, &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), corpus);
        assert!(load_corpus(dir.path().join("missing.jsonl")).unwrap_err().is_io());
    }
}
