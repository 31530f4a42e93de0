//! `crex` — compile expert-grounded reference causal graphs, extract causal
//! relations from post corpora through a model endpoint, and score the
//! results.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crex_core::baseline::{random_graph, BaselineConfig};
use crex_core::corpus::{load_corpus, CorpusFormat, PostLabel};
use crex_core::experiment::{
    report_from_directory, run_experiment, single_extraction_run, ExperimentConfig,
};
use crex_core::extraction::RunOutcome;
use crex_core::graph::{CanonicalVocabulary, CausalGraph};
use crex_core::metrics::evaluate;
use crex_core::reference::{
    load_evidence_table, prune_by_evidence, validate_table, BaseChain, ReferenceGraph,
};
use crex_core::stats::StdDevMode;

#[derive(Parser)]
#[command(name = "crex", version, about = "Causal relation extraction and evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a reference graph from a base chain and an evidence table.
    CompileRef(CompileRefArgs),
    /// Machine-check an evidence table against a base chain.
    ValidateRef(ValidateRefArgs),
    /// Corpus inspection.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
    /// Sample a seeded random graph over a vocabulary.
    Baseline(BaselineArgs),
    /// Execute one extraction run from an experiment config.
    Extract(ExtractArgs),
    /// Score a prediction against a reference graph.
    Evaluate(EvaluateArgs),
    /// Aggregate per-run metric reports into a comparison table.
    Report(ReportArgs),
    /// Run a configured experiment end to end.
    Run(RunArgs),
}

#[derive(Args)]
struct CompileRefArgs {
    /// Base chain JSON file.
    #[arg(long)]
    base: PathBuf,
    /// Evidence table TSV file.
    #[arg(long)]
    evidence: PathBuf,
    /// Output reference graph JSON file.
    #[arg(long)]
    out: PathBuf,
    /// Event name recorded in the reference; defaults to the base chain's
    /// event type.
    #[arg(long)]
    event: Option<String>,
}

#[derive(Args)]
struct ValidateRefArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    evidence: PathBuf,
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Print total, distinct-id, and per-label post counts.
    Stats(CorpusStatsArgs),
}

#[derive(Args)]
struct CorpusStatsArgs {
    /// Corpus file (.tsv or .jsonl).
    #[arg(long = "in")]
    input: PathBuf,
    /// Override the format inferred from the file extension.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Vocabulary JSON file.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long = "p-node", default_value_t = 0.5)]
    p_node: f64,
    #[arg(long = "p-edge", default_value_t = 0.5)]
    p_edge: f64,
    /// Output graph JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Experiment config JSON file (main or ablation mode).
    #[arg(long)]
    config: PathBuf,
    /// Which run of the experiment to execute.
    #[arg(long, default_value_t = 0)]
    run: usize,
    /// Output run artifact JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Reference graph JSON file.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Prediction: a graph JSON, a run artifact, or a run outcome.
    #[arg(long)]
    pred: PathBuf,
    /// Output metric report JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory whose immediate subdirectories are conditions holding
    /// per-run `metrics.json` files.
    #[arg(long)]
    runs: PathBuf,
    /// Comparison pair as "left:right" condition labels; repeatable.
    #[arg(long)]
    compare: Vec<String>,
    /// Output Markdown table.
    #[arg(long)]
    out: PathBuf,
    /// Output JSON document.
    #[arg(long)]
    json: PathBuf,
    /// Report sample (n − 1) standard deviations instead of population.
    #[arg(long)]
    sample_std: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Root directory for experiment output.
    #[arg(long)]
    out: PathBuf,
    /// Validate and print the resolved config without running anything.
    #[arg(long)]
    dry_run: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::CompileRef(args) => compile_ref(args),
        Command::ValidateRef(args) => validate_ref(args),
        Command::Corpus { command: CorpusCommand::Stats(args) } => corpus_stats(args),
        Command::Baseline(args) => baseline(args),
        Command::Extract(args) => extract(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Report(args) => report(args),
        Command::Run(args) => run(args),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn compile_ref(args: CompileRefArgs) -> Result<ExitCode> {
    let base = BaseChain::load(&args.base)
        .with_context(|| format!("loading base chain {}", args.base.display()))?;
    let table = load_evidence_table(&args.evidence)
        .with_context(|| format!("loading evidence table {}", args.evidence.display()))?;
    let event = args
        .event
        .unwrap_or_else(|| base.vocabulary().event_type().to_string());
    let reference = prune_by_evidence(event, &base, &table)?;
    reference.save(&args.out)?;
    println!(
        "compiled reference {:?}: {} edges over {} nodes ({} evidence records) -> {}",
        reference.event_name(),
        reference.graph().edge_count(),
        reference.graph().node_count(),
        table.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn validate_ref(args: ValidateRefArgs) -> Result<ExitCode> {
    let base = BaseChain::load(&args.base)?;
    let table = load_evidence_table(&args.evidence)?;
    let report = validate_table(&base, &table);
    if report.is_clean() {
        println!("evidence table is clean: {} records", table.len());
        Ok(ExitCode::SUCCESS)
    } else {
        for problem in &report.problems {
            println!("row {}: {}: {}", problem.row, problem.kind, problem.detail);
        }
        println!("{} problem(s) in {} records", report.problems.len(), table.len());
        Ok(ExitCode::FAILURE)
    }
}

fn corpus_stats(args: CorpusStatsArgs) -> Result<ExitCode> {
    let format = match args.format.as_deref() {
        Some("tsv") => CorpusFormat::Tsv,
        Some("jsonl") => CorpusFormat::Jsonl,
        Some(other) => bail!("unknown format {other:?} (expected tsv or jsonl)"),
        None => CorpusFormat::from_path(&args.input)?,
    };
    let corpus = load_corpus(&args.input, format)?;
    println!("posts: {}", corpus.len());
    println!("distinct ids: {}", corpus.distinct_ids());
    for label in [PostLabel::Informative, PostLabel::NonInformative, PostLabel::Unlabeled] {
        println!("{label}: {}", corpus.label_count(label));
    }
    Ok(ExitCode::SUCCESS)
}

fn baseline(args: BaselineArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.vocab)
        .with_context(|| format!("loading vocabulary {}", args.vocab.display()))?;
    let vocab: CanonicalVocabulary = serde_json::from_str(&text)?;
    let config = BaselineConfig::new(args.p_node, args.p_edge, args.seed)?;
    let graph = random_graph(&std::sync::Arc::new(vocab), &config);
    write_json(&args.out, &graph)?;
    println!(
        "sampled baseline graph: {} nodes, {} edges (seed {}) -> {}",
        graph.node_count(),
        graph.edge_count(),
        args.seed,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn extract(args: ExtractArgs) -> Result<ExitCode> {
    let config = ExperimentConfig::load(&args.config)?;
    let artifact = single_extraction_run(&config, args.run)?;
    write_json(&args.out, &artifact)?;
    match &artifact.extraction.result {
        RunOutcome::Graph(graph) => println!(
            "run {}: {} batches, {} edges over {} nodes -> {}",
            args.run,
            artifact.extraction.batches.len(),
            graph.edge_count(),
            graph.node_count(),
            args.out.display()
        ),
        RunOutcome::Refusal => println!(
            "run {}: {} batches, model refused -> {}",
            args.run,
            artifact.extraction.batches.len(),
            args.out.display()
        ),
    }
    Ok(ExitCode::SUCCESS)
}

/// Accepts a bare graph file, a run artifact, or a serialized run outcome.
fn load_prediction(path: &Path) -> Result<RunOutcome> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("loading prediction {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(extraction) = value.get("extraction") {
        let result = extraction
            .get("result")
            .context("run artifact has no extraction.result")?;
        return Ok(serde_json::from_value(result.clone())?);
    }
    if value.get("kind").is_some() {
        return Ok(serde_json::from_value(value)?);
    }
    let graph: CausalGraph = serde_json::from_value(value)?;
    Ok(RunOutcome::Graph(graph))
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<ExitCode> {
    let reference = ReferenceGraph::load(&args.reference)?;
    let prediction = load_prediction(&args.pred)?;
    let report = evaluate(reference.graph(), &prediction)?;
    write_json(&args.out, &report)?;
    if report.refused {
        println!("prediction refused; all metrics N/A -> {}", args.out.display());
    } else {
        println!(
            "f1 {:.4}, shd {}, nshd {:.4} -> {}",
            report.f1.unwrap_or_default(),
            report.shd.unwrap_or_default(),
            report.nshd.unwrap_or_default(),
            args.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let mut comparisons = Vec::new();
    for spec in &args.compare {
        let Some((left, right)) = spec.split_once(':') else {
            bail!("--compare expects \"left:right\", got {spec:?}");
        };
        comparisons.push((left.to_string(), right.to_string()));
    }
    let mode = if args.sample_std { StdDevMode::Sample } else { StdDevMode::Population };
    let document = report_from_directory(&args.runs, &comparisons, mode)?;
    write_json(&args.json, &document)?;
    std::fs::write(&args.out, document.to_markdown())
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "report over {} condition(s) -> {} and {}",
        document.rows.len(),
        args.out.display(),
        args.json.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let config = ExperimentConfig::load(&args.config)?;
    let resolved = config.resolved()?;
    if args.dry_run {
        println!("{}", serde_json::to_string_pretty(&resolved)?);
        println!(
            "dry run: would write experiment to {}",
            args.out
                .join(format!("<label>-{}", resolved.content_hash()?))
                .display()
        );
        return Ok(ExitCode::SUCCESS);
    }
    let dir = run_experiment(&config, &args.out)?;
    println!("experiment complete -> {}", dir.display());
    Ok(ExitCode::SUCCESS)
}
