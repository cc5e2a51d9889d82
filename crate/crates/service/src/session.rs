//! Session manifests, task queues and blind aliases.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use polytope_core::{Corpus, Target};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("manifest: annotator {0:?} listed twice")]
    DuplicateAnnotator(String),
    #[error("manifest: invalid annotator id {0:?}")]
    InvalidAnnotator(String),
    #[error("manifest: annotator {annotator:?} is assigned {sample_id}/{target}, which the corpus lacks")]
    UnknownTask { annotator: String, sample_id: String, target: String },
    #[error("manifest: unknown target {0:?}")]
    BadTarget(String),
}

#[derive(Debug, Clone, Deserialize)]
struct ManifestFile {
    #[serde(default)]
    blind: bool,
    sessions: Vec<SessionSpec>,
}

#[derive(Debug, Clone, Deserialize)]
struct SessionSpec {
    annotator: String,
    #[serde(default)]
    blind: Option<bool>,
    #[serde(default)]
    tasks: Vec<TaskSpec>,
    /// Cross product of `samples` and `targets`, appended after `tasks`.
    #[serde(default)]
    samples: Vec<String>,
    #[serde(default)]
    targets: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct TaskSpec {
    sample_id: String,
    target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Task {
    pub sample_id: String,
    pub target: Target,
}

/// Bidirectional system-name aliasing for one session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Aliases {
    to_alias: BTreeMap<String, String>,
    to_raw: BTreeMap<String, String>,
}

/// `system-A` … `system-Z`, `system-AA`, …
pub fn alias_label(index: usize) -> String {
    let mut n = index + 1;
    let mut letters = Vec::new();
    while n > 0 {
        n -= 1;
        letters.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    letters.reverse();
    format!("system-{}", String::from_utf8(letters).expect("ascii"))
}

impl Aliases {
    /// Aliases follow first appearance in `ordered`; duplicates are ignored.
    pub fn new<'a>(ordered: impl IntoIterator<Item = &'a str>) -> Self {
        let mut aliases = Aliases::default();
        for name in ordered {
            if !aliases.to_alias.contains_key(name) {
                let alias = alias_label(aliases.to_alias.len());
                aliases.to_alias.insert(name.to_string(), alias.clone());
                aliases.to_raw.insert(alias, name.to_string());
            }
        }
        aliases
    }

    pub fn alias(&self, system: &str) -> Option<&str> {
        self.to_alias.get(system).map(String::as_str)
    }

    pub fn raw(&self, alias: &str) -> Option<&str> {
        self.to_raw.get(alias).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub annotator: String,
    pub tasks: Vec<Task>,
    pub blind: bool,
    aliases: Aliases,
}

impl Session {
    fn new(annotator: String, tasks: Vec<Task>, blind: bool, corpus: &Corpus) -> Self {
        // queue order first, then any remaining corpus systems, so that
        // whole-corpus reports can be aliased too
        let all = corpus.system_names();
        let aliases =
            Aliases::new(tasks.iter().filter_map(|t| t.target.system_name()).chain(all.iter().map(String::as_str)));
        Session { annotator, tasks, blind, aliases }
    }

    pub fn is_assigned(&self, sample_id: &str, target: &Target) -> bool {
        self.tasks.iter().any(|t| t.sample_id == sample_id && &t.target == target)
    }

    /// Target as shown to this session's annotator.
    pub fn display_target(&self, target: &Target) -> String {
        match target {
            Target::System(name) if self.blind => {
                self.aliases.alias(name).map(str::to_string).unwrap_or_else(|| "system-?".to_string())
            }
            other => other.to_string(),
        }
    }

    pub fn display_system(&self, name: &str) -> String {
        if self.blind {
            self.display_target(&Target::System(name.to_string()))
        } else {
            name.to_string()
        }
    }

    /// Parses a target as written by this session's client: aliases in a
    /// blind session, `system:NAME` otherwise; `reference` in both.
    pub fn resolve_target(&self, text: &str) -> Option<Target> {
        if self.blind {
            match text {
                "reference" => Some(Target::Reference),
                alias => self.aliases.raw(alias).map(|raw| Target::System(raw.to_string())),
            }
        } else {
            text.parse().ok()
        }
    }
}

pub fn valid_annotator_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

/// Static task assignment. Without a manifest every annotator id is accepted
/// and assigned every (sample, system) pair.
#[derive(Debug, Clone)]
pub enum Sessions {
    Open { blind: bool },
    Manifest(BTreeMap<String, Session>),
}

impl Sessions {
    pub fn open(blind: bool) -> Self {
        Sessions::Open { blind }
    }

    /// Parses a manifest; `force_blind` turns every session blind.
    pub fn from_manifest(text: &str, corpus: &Corpus, force_blind: bool) -> Result<Self, ManifestError> {
        let file: ManifestFile = serde_json::from_str(text)?;
        let mut sessions = BTreeMap::new();
        for spec in file.sessions {
            if !valid_annotator_id(&spec.annotator) {
                return Err(ManifestError::InvalidAnnotator(spec.annotator));
            }
            let mut tasks = Vec::new();
            let crossed = spec
                .samples
                .iter()
                .flat_map(|s| spec.targets.iter().map(move |t| TaskSpec { sample_id: s.clone(), target: t.clone() }));
            for task in spec.tasks.iter().cloned().chain(crossed) {
                let target: Target = task.target.parse().map_err(|_| ManifestError::BadTarget(task.target.clone()))?;
                if corpus.text(&task.sample_id, &target).is_none() {
                    return Err(ManifestError::UnknownTask {
                        annotator: spec.annotator.clone(),
                        sample_id: task.sample_id,
                        target: task.target,
                    });
                }
                let task = Task { sample_id: task.sample_id, target };
                if !tasks.contains(&task) {
                    tasks.push(task);
                }
            }
            let blind = force_blind || spec.blind.unwrap_or(file.blind);
            let session = Session::new(spec.annotator.clone(), tasks, blind, corpus);
            if sessions.insert(spec.annotator.clone(), session).is_some() {
                return Err(ManifestError::DuplicateAnnotator(spec.annotator));
            }
        }
        Ok(Sessions::Manifest(sessions))
    }

    pub fn load(path: &Path, corpus: &Corpus, force_blind: bool) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ManifestError::Read { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_manifest(&text, corpus, force_blind)
    }

    /// The session for `annotator`, or `None` if the manifest does not list it.
    pub fn session(&self, annotator: &str, corpus: &Corpus) -> Option<Session> {
        match self {
            Sessions::Open { blind } => {
                let systems = corpus.system_names();
                let tasks = corpus
                    .samples()
                    .iter()
                    .flat_map(|s| {
                        systems
                            .iter()
                            .filter(|name| s.system_outputs.contains_key(*name))
                            .map(|name| Task { sample_id: s.id.clone(), target: Target::System(name.clone()) })
                    })
                    .collect();
                Some(Session::new(annotator.to_string(), tasks, *blind, corpus))
            }
            Sessions::Manifest(map) => map.get(annotator).cloned(),
        }
    }

    /// Documents assigned to at least two annotators, sorted; `None` without
    /// a manifest.
    pub fn overlap(&self) -> Option<Vec<(String, Target)>> {
        let Sessions::Manifest(map) = self else { return None };
        let mut seen: BTreeMap<(String, Target), usize> = BTreeMap::new();
        for session in map.values() {
            let unique: BTreeSet<_> = session.tasks.iter().map(|t| (t.sample_id.clone(), t.target.clone())).collect();
            for doc in unique {
                *seen.entry(doc).or_default() += 1;
            }
        }
        Some(seen.into_iter().filter(|(_, n)| *n >= 2).map(|(d, _)| d).collect())
    }

    /// Tasks of one annotator as documents; `None` without a manifest.
    pub fn documents(&self, annotator: &str) -> Option<Vec<(String, Target)>> {
        let Sessions::Manifest(map) = self else { return None };
        Some(
            map.get(annotator)
                .map(|s| s.tasks.iter().map(|t| (t.sample_id.clone(), t.target.clone())).collect())
                .unwrap_or_default(),
        )
    }
}
