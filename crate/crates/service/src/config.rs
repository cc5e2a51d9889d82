use std::net::SocketAddr;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub corpus_path: PathBuf,
    /// One `<annotator>.jsonl` log per annotator, plus task progress files.
    pub log_dir: PathBuf,
    /// Session manifest; without one every annotator gets every output.
    pub manifest_path: Option<PathBuf>,
    /// Forces every session blind.
    pub blind: bool,
}

impl ServiceConfig {
    pub fn new(corpus_path: impl Into<PathBuf>, log_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            corpus_path: corpus_path.into(),
            log_dir: log_dir.into(),
            manifest_path: None,
            blind: false,
        }
    }
}
