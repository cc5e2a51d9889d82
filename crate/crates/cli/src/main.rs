//! `polytope`: batch entry point for every pipeline stage.
//!
//! Exit codes: 0 success, 1 usage, 2 data or validation error, 3 I/O error.
//! Diagnostics go to stderr as one JSON object.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polytope_core::analysis::{
    annotated_documents, annotator_agreement, corpus_correlation_table, read_system_summaries, system_row,
    AnalysisError,
};
use polytope_core::layout::{position_distribution, LayoutConfig, LayoutError, LexicalF1, SentenceScorer};
use polytope_core::rouge::rouge_corpus;
use polytope_core::scoring::{build_all_reports, build_system_report};
use polytope_core::storage::{
    export_agreement, export_correlation, export_distribution, export_report, export_rouge, export_sample_scores,
    export_system_correlation, load_corpus, replay_annotations_into, serialize_annotation_set, serialize_corpus,
    ExportFormat, ExportOptions,
};
use polytope_core::{
    Aggregation, AnnotationSet, Corpus, ExternalScores, LcsMode, RougeConfig, SeverityMatrix, StorageError,
    SystemReport, Target,
};
use polytope_service::{ServiceConfig, Sessions};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "polytope", version, about = "Fine-grained error-based summarization evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a corpus and annotation logs load and replay cleanly.
    Validate(ValidateArgs),
    /// Per-system error tallies and PolyTope scores.
    Score(ScoreArgs),
    /// ROUGE-1/2/L of one system against the references.
    Rouge(RougeArgs),
    /// Pearson correlation between ROUGE and PolyTope.
    Correlate(CorrelateArgs),
    /// Inter-annotator agreement over per-document scores.
    Agreement(AgreementArgs),
    /// Source-position distribution of summary content.
    Layout(LayoutArgs),
    /// Canonical corpus or compacted annotation log.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// Output format.
    #[arg(long, default_value = "table", value_parser = parse_format)]
    format: ExportFormat,
    /// Decimal places for real-valued cells.
    #[arg(long)]
    precision: Option<usize>,
    /// Write to a file instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_format(s: &str) -> std::result::Result<ExportFormat, String> {
    s.parse()
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Annotation logs to replay; repeatable.
    #[arg(long = "annotations")]
    annotations: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long = "annotations")]
    annotations: Vec<PathBuf>,
    /// Systems to report, in column order; default every system.
    #[arg(long = "system")]
    systems: Vec<String>,
    /// Score the references instead of system outputs.
    #[arg(long, conflicts_with = "systems")]
    reference: bool,
    /// Single score row with this aggregation; both rows when omitted.
    #[arg(long)]
    aggregation: Option<Aggregation>,
    /// Only this annotator's annotations.
    #[arg(long)]
    annotator: Option<String>,
    /// Per-sample rows instead of the summary table (one system only).
    #[arg(long)]
    per_sample: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct RougeFlags {
    /// Disable Porter stemming.
    #[arg(long)]
    no_stem: bool,
    #[arg(long)]
    remove_stopwords: bool,
    /// ROUGE-L over one flat sequence or the union of sentence LCSs.
    #[arg(long, default_value = "flat")]
    lcs: LcsMode,
}

impl RougeFlags {
    fn config(&self) -> RougeConfig {
        RougeConfig { use_stemming: !self.no_stem, remove_stopwords: self.remove_stopwords, lcs_mode: self.lcs }
    }
}

#[derive(Debug, Args)]
struct RougeArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    system: String,
    #[command(flatten)]
    rouge: RougeFlags,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// CSV with header `system,rouge1,rouge2,rouge_l,polytope`; gives the
    /// system-level row only.
    #[arg(long, conflicts_with_all = ["corpus", "annotations"])]
    systems: Option<PathBuf>,
    #[arg(long, required_unless_present = "systems")]
    corpus: Option<PathBuf>,
    #[arg(long = "annotations")]
    annotations: Vec<PathBuf>,
    #[arg(long, default_value = "macro")]
    aggregation: Aggregation,
    #[command(flatten)]
    rouge: RougeFlags,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct AgreementArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// One annotator's log, named by its file stem; repeatable.
    #[arg(long = "log", required = true)]
    logs: Vec<PathBuf>,
    /// Session manifest; each annotator is then scored on its own tasks.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, required_unless_present = "reference")]
    system: Option<String>,
    #[arg(long, conflicts_with = "system")]
    reference: bool,
    /// CSV `summary_sentence_id,source_position,score` replacing lexical F1.
    #[arg(long)]
    external: Option<PathBuf>,
    /// Positions past this share one tail bucket.
    #[arg(long, default_value_t = 50)]
    cap: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Subcommand)]
enum ExportCommand {
    /// Rewrite a corpus in canonical form.
    Corpus {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay logs and write one creation record per live annotation.
    Log {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long = "annotations", required = true)]
        annotations: Vec<PathBuf>,
        #[arg(long)]
        annotator: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "POLYTOPE_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "POLYTOPE_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "POLYTOPE_LOG_DIR")]
    log_dir: PathBuf,
    #[arg(long, env = "POLYTOPE_MANIFEST")]
    manifest: Option<PathBuf>,
    /// Hide system names from every session.
    #[arg(long, env = "POLYTOPE_BLIND")]
    blind: bool,
}

/// A failure with its exit code and JSON diagnostic.
#[derive(Debug)]
struct Failure {
    exit: u8,
    code: String,
    message: String,
    path: Option<PathBuf>,
    line: Option<usize>,
}

impl Failure {
    fn data(code: impl Into<String>, message: impl ToString) -> Self {
        Failure { exit: 2, code: code.into(), message: message.to_string(), path: None, line: None }
    }

    fn at(mut self, path: &Path) -> Self {
        self.path.get_or_insert_with(|| path.to_path_buf());
        self
    }

    fn storage(e: StorageError, path: &Path) -> Self {
        let (exit, path) = match &e {
            StorageError::Io { path, .. } => (3, path.clone()),
            _ => (2, path.to_path_buf()),
        };
        Failure { exit, code: e.code().to_string(), message: e.to_string(), path: Some(path), line: e.line() }
    }

    fn io(e: std::io::Error, path: &Path) -> Self {
        Failure { exit: 3, code: "Io".into(), message: e.to_string(), path: Some(path.to_path_buf()), line: None }
    }

    fn report(&self) {
        let diagnostic = json!({"error": {
            "code": self.code,
            "message": self.message,
            "path": self.path.as_ref().map(|p| p.display().to_string()),
            "line": self.line,
        }});
        eprintln!("{diagnostic}");
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::Stats(s) => Failure::data(s.code(), &e),
            AnalysisError::Score(_) => Failure::data("MissingOutput", &e),
            AnalysisError::Table(_) => Failure::data("ParseError", &e),
        }
    }
}

impl From<LayoutError> for Failure {
    fn from(e: LayoutError) -> Self {
        Failure::data(e.code(), &e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn load(path: &Path) -> CliResult<Corpus> {
    load_corpus(path).map_err(|e| Failure::storage(e, path))
}

fn replay_into(set: &mut AnnotationSet, corpus: &Corpus, path: &Path) -> CliResult<()> {
    let file = fs::File::open(path).map_err(|e| Failure::io(e, path))?;
    replay_annotations_into(set, std::io::BufReader::new(file), corpus, SeverityMatrix::builtin())
        .map_err(|e| Failure::storage(e, path))
}

fn replay_all(corpus: &Corpus, paths: &[PathBuf]) -> CliResult<AnnotationSet> {
    let mut set = AnnotationSet::new();
    for path in paths {
        replay_into(&mut set, corpus, path)?;
    }
    Ok(set)
}

fn emit(bytes: &[u8], output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| Failure::io(e, path)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(|e| Failure::io(e, Path::new("<stdout>")))
        }
    }
}

fn options(out: &Output, default_precision: usize) -> ExportOptions {
    ExportOptions { format: out.format, precision: out.precision.unwrap_or(default_precision), aggregation: None }
}

fn validate(args: ValidateArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let set = replay_all(&corpus, &args.annotations)?;
    let summary = json!({
        "samples": corpus.len(),
        "systems": corpus.system_names(),
        "annotations": set.len(),
        "annotators": set.annotators(),
    });
    emit(format!("{summary}\n").as_bytes(), None)
}

fn score(args: ScoreArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let mut set = replay_all(&corpus, &args.annotations)?;
    if let Some(annotator) = &args.annotator {
        set = set.by_annotator(annotator);
    }
    let reports: Vec<SystemReport> = if args.reference {
        vec![build_system_report(&corpus, &set, &Target::Reference).map_err(|e| Failure::data("MissingOutput", e))?]
    } else if args.systems.is_empty() {
        build_all_reports(&corpus, &set).map_err(|e| Failure::data("MissingOutput", e))?
    } else {
        args.systems
            .iter()
            .map(|s| build_system_report(&corpus, &set, &Target::system(s.as_str())))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Failure::data("MissingOutput", e))?
    };
    let options = ExportOptions { aggregation: args.aggregation, ..options(&args.out, 2) };
    let bytes = if args.per_sample {
        let [report] = reports.as_slice() else {
            return Err(Failure { exit: 1, ..Failure::data("Usage", "--per-sample needs exactly one system") });
        };
        export_sample_scores(report, &options)
    } else {
        export_report(&reports, &options)
    };
    emit(&bytes, args.out.output.as_deref())
}

fn rouge(args: RougeArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let target = Target::system(args.system.as_str());
    let report = rouge_corpus::<f64>(&corpus, &target, &args.rouge.config())
        .map_err(|e| Failure::data("MissingOutput", e).at(&args.corpus))?;
    emit(&export_rouge(&report, &options(&args.out, 3)), args.out.output.as_deref())
}

fn correlate(args: CorrelateArgs) -> CliResult<()> {
    let options = options(&args.out, 2);
    let bytes = if let Some(path) = &args.systems {
        let file = fs::File::open(path).map_err(|e| Failure::io(e, path))?;
        let summaries = read_system_summaries::<f64, _>(file).map_err(|e| Failure::from(e).at(path))?;
        let row = system_row(&summaries);
        if let (true, Some(code)) = (row.cells.iter().all(|c| c.value.is_none()), row.cells[0].error) {
            return Err(Failure::data(code, "system-level correlation is undefined").at(path));
        }
        export_system_correlation(&row, &options)
    } else {
        let corpus_path = args.corpus.as_deref().expect("required by clap");
        let corpus = load(corpus_path)?;
        let set = replay_all(&corpus, &args.annotations)?;
        let table = corpus_correlation_table::<f64>(&corpus, &set, &args.rouge.config(), args.aggregation)?;
        if table.is_all_undefined() {
            let code = table.first_error().unwrap_or("DegenerateSeries");
            return Err(Failure::data(code, "no correlation coefficient is defined"));
        }
        export_correlation(&table, &options)
    };
    emit(&bytes, args.out.output.as_deref())
}

/// Annotator names from log file stems; repeated stems get a `#n` suffix.
fn annotator_names(logs: &[PathBuf]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    logs.iter()
        .map(|p| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "log".into());
            let n = seen.entry(stem.clone()).or_default();
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}#{n}")
            }
        })
        .collect()
}

fn agreement(args: AgreementArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let sessions = match &args.manifest {
        Some(path) => {
            Some(Sessions::load(path, &corpus, false).map_err(|e| Failure::data("ManifestError", e).at(path))?)
        }
        None => None,
    };
    let names = annotator_names(&args.logs);
    let sets: Vec<AnnotationSet> =
        args.logs.iter().map(|p| replay_all(&corpus, std::slice::from_ref(p))).collect::<CliResult<_>>()?;
    let shared = annotated_documents(&sets);
    let mut per_annotator = BTreeMap::new();
    for (name, set) in names.into_iter().zip(sets) {
        let documents = sessions.as_ref().and_then(|s| s.documents(&name)).unwrap_or_else(|| shared.clone());
        per_annotator.insert(name, (set, documents));
    }
    let result = annotator_agreement::<f64>(&corpus, &per_annotator)?;
    emit(&export_agreement(&result, &options(&args.out, 4)), args.out.output.as_deref())
}

fn layout(args: LayoutArgs) -> CliResult<()> {
    let corpus = load(&args.corpus)?;
    let target = match &args.system {
        Some(name) => Target::system(name.as_str()),
        None => Target::Reference,
    };
    let scorer: Box<dyn SentenceScorer<f64>> = match &args.external {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Failure::io(e, path))?;
            Box::new(ExternalScores::from_csv(file).map_err(|e| Failure::from(e).at(path))?)
        }
        None => Box::new(LexicalF1),
    };
    let config = LayoutConfig { position_cap: args.cap, epsilon: args.epsilon };
    let dist = position_distribution(&corpus, &target, scorer.as_ref(), &config)?;
    emit(&export_distribution(&dist, &options(&args.out, 4)), args.out.output.as_deref())
}

fn export(command: ExportCommand) -> CliResult<()> {
    match command {
        ExportCommand::Corpus { corpus, output } => {
            let c = load(&corpus)?;
            emit(serialize_corpus(&c).as_bytes(), output.as_deref())
        }
        ExportCommand::Log { corpus, annotations, annotator, output } => {
            let c = load(&corpus)?;
            let mut set = replay_all(&c, &annotations)?;
            if let Some(a) = &annotator {
                set = set.by_annotator(a);
            }
            emit(serialize_annotation_set(&set).as_bytes(), output.as_deref())
        }
    }
}

fn serve(args: ServeArgs) -> CliResult<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let config = ServiceConfig {
        listen: args.listen,
        corpus_path: args.corpus,
        log_dir: args.log_dir,
        manifest_path: args.manifest,
        blind: args.blind,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(e, Path::new("<runtime>")))?;
    runtime.block_on(polytope_service::serve(config)).map_err(|e| match e {
        polytope_service::ServeError::Io(io) => Failure::io(io, Path::new("<listener>")),
        polytope_service::ServeError::Startup(polytope_service::StartupError::Storage(s)) => {
            let path = match &s {
                StorageError::Io { path, .. } => path.clone(),
                _ => PathBuf::from("<annotation logs>"),
            };
            Failure::storage(s, &path)
        }
        other => Failure::data("StartupError", other),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate(a) => validate(a),
        Command::Score(a) => score(a),
        Command::Rouge(a) => rouge(a),
        Command::Correlate(a) => correlate(a),
        Command::Agreement(a) => agreement(a),
        Command::Layout(a) => layout(a),
        Command::Export(c) => export(c),
        Command::Serve(a) => serve(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let help = matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion);
            return ExitCode::from(if help { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            failure.report();
            ExitCode::from(failure.exit)
        }
    }
}
