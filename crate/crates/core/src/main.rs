use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use hybridqa::config::AppConfig;
use hybridqa::eval::{load_dataset, render_report, run_eval, Arm, ReportFormat};
use hybridqa::fusion::RetrievalMode;
use hybridqa::index::HybridIndex;
use hybridqa::ingest::{ingest_manifest, load_manifest};
use hybridqa::prompt::BackendKind;

#[derive(Parser)]
#[command(name = "hybridqa", version, about = "Hybrid-retrieval question answering")]
struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load, chunk and index a corpus described by a manifest.
    Ingest(IngestArgs),
    /// Answer one question.
    Ask(AskArgs),
    /// Run an ablation over a question/answer dataset.
    Eval(EvalArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output index directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    chunk_overlap: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    HttpChat,
    StubEcho,
    StubExtractive,
}

impl From<Backend> for BackendKind {
    fn from(b: Backend) -> Self {
        match b {
            Backend::HttpChat => BackendKind::HttpChat,
            Backend::StubEcho => BackendKind::StubEcho,
            Backend::StubExtractive => BackendKind::StubExtractive,
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Index directory written by `ingest`.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Abbreviation dictionary (JSON).
    #[arg(long)]
    dictionary: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    n_dense: Option<usize>,
    #[arg(long)]
    n_sparse: Option<usize>,
    #[arg(long)]
    n_hybrid: Option<usize>,
}

#[derive(Args)]
struct AskArgs {
    question: String,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "hybrid", value_parser = clap::value_parser!(RetrievalMode))]
    mode: RetrievalMode,
    #[arg(long, value_enum, default_value = "on")]
    adh: OnOff,
    /// Print the fused candidate table as JSON.
    #[arg(long)]
    debug: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Comma-separated arms such as `hybrid:on,sparse:off`; default is all eight.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(Arm))]
    arms: Vec<Arm>,
    #[arg(long, default_value = "markdown", value_parser = clap::value_parser!(ReportFormat))]
    format: ReportFormat,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset label in the report; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long)]
    bind: Option<String>,
    #[arg(long)]
    feedback: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>) -> Result<AppConfig> {
    match path {
        Some(p) => AppConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(AppConfig::default()),
    }
}

fn apply_engine_args(cfg: &mut AppConfig, args: &EngineArgs) -> Result<()> {
    if let Some(p) = &args.index {
        cfg.index_dir = p.clone();
    }
    if let Some(p) = &args.dictionary {
        cfg.dictionary = Some(p.clone());
    }
    if let Some(b) = args.backend {
        cfg.generation.backend = b.into();
    }
    if let Some(n) = args.n_dense {
        cfg.retrieval.n_dense = n;
    }
    if let Some(n) = args.n_sparse {
        cfg.retrieval.n_sparse = n;
    }
    if let Some(n) = args.n_hybrid {
        cfg.retrieval.n_hybrid = n;
    }
    cfg.validate()?;
    Ok(())
}

fn ingest(mut cfg: AppConfig, args: IngestArgs) -> Result<()> {
    if let Some(m) = args.manifest {
        cfg.manifest = Some(m);
    }
    if let Some(out) = args.out {
        cfg.index_dir = out;
    }
    if let Some(n) = args.chunk_size {
        cfg.chunking.chunk_size = n;
    }
    if let Some(n) = args.chunk_overlap {
        cfg.chunking.chunk_overlap = n;
    }
    cfg.validate()?;
    let Some(manifest) = cfg.manifest.clone() else {
        bail!("no manifest given (use --manifest or set `manifest` in the config)");
    };
    let entries = load_manifest(&manifest)?;
    let outcome = ingest_manifest(&entries, &cfg.chunking)?;
    let embedder = cfg.embedder.build()?;
    let index = HybridIndex::build(&outcome, cfg.bm25, embedder.as_ref())?;
    index.save(&cfg.index_dir)?;

    println!("documents: {}", outcome.documents.len());
    println!("chunks: {}", outcome.chunks.len());
    println!("terms: {}", index.sparse.as_ref().map_or(0, |s| s.term_count()));
    println!("dimension: {}", embedder.dimension());
    println!("index: {}", cfg.index_dir.display());
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn ask(mut cfg: AppConfig, args: AskArgs) -> Result<()> {
    apply_engine_args(&mut cfg, &args.engine)?;
    let engine = cfg.open_engine()?;
    let opts = engine.options(args.mode, matches!(args.adh, OnOff::On));
    let outcome = engine.ask(&args.question, &[], &opts)?;
    println!("{}", outcome.envelope.answer);
    println!();
    println!("Sources:");
    for (i, s) in engine.source_refs(&outcome.envelope.sources).iter().enumerate() {
        println!("  {}. {} ({})", i + 1, s.chunk_id, s.uri);
    }
    if args.debug {
        println!();
        println!("{}", serde_json::to_string_pretty(&outcome.candidates)?);
    }
    Ok(())
}

fn eval(mut cfg: AppConfig, args: EvalArgs) -> Result<()> {
    apply_engine_args(&mut cfg, &args.engine)?;
    let examples = load_dataset(&args.dataset)?;
    let engine = cfg.open_engine()?;
    let arms = if args.arms.is_empty() { Arm::full_grid() } else { args.arms };
    let name = args.name.unwrap_or_else(|| {
        args.dataset
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let report = run_eval(
        &engine,
        &name,
        &examples,
        &arms,
        args.parallelism.unwrap_or(cfg.eval_parallelism),
    )?;
    let text = render_report(&report, args.format);
    match &args.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    let errors = report.error_count();
    if errors > 0 {
        eprintln!("{errors} example(s) failed and were scored 0");
    }
    Ok(())
}

fn serve(mut cfg: AppConfig, args: ServeArgs) -> Result<()> {
    apply_engine_args(&mut cfg, &args.engine)?;
    if let Some(bind) = args.bind {
        cfg.bind = bind;
    }
    if let Some(f) = args.feedback {
        cfg.feedback_path = f;
    }
    tokio::runtime::Runtime::new()?.block_on(hybridqa::service::serve(cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = load_config(cli.config.as_ref()).and_then(|cfg| match cli.command {
        Command::Ingest(a) => ingest(cfg, a),
        Command::Ask(a) => ask(cfg, a),
        Command::Eval(a) => eval(cfg, a),
        Command::Serve(a) => serve(cfg, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
