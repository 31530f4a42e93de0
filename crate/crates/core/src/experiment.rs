//! Config-driven experiment driver: binds corpus, extraction, baseline,
//! metrics, and reporting into reproducible multi-run experiments.
//!
//! All artifacts are plain JSON under a content-addressed directory
//! (`<label>-<hash of resolved config>`), so distinct configurations never
//! collide and re-running an identical configuration with the mock client
//! reproduces every byte. Nothing time-dependent is ever written.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::baseline::{random_graph, BaselineConfig, BaselineError};
use crate::corpus::{load_corpus, CorpusError, CorpusFormat, PostCorpus, PostLabel};
use crate::extraction::{
    default_refusal_phrases, extract_run, ExtractionError, ExtractionRun, HttpModelClient,
    MockModelClient, MockScript, ModelClient, RunConfig, RunOutcome, SamplingParams,
};
use crate::graph::{CanonicalVocabulary, GraphError};
use crate::metrics::{evaluate, MetricError, MetricReport};
use crate::reference::{ReferenceError, ReferenceGraph};
use crate::report::{render_report, ReportDocument};
use crate::stats::{RunSeries, StatsError, StdDevMode};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: ExtractionError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which experiment to run: the main evaluation, the non-informative-post
/// ablation, or the random-graph baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentMode {
    Main,
    Ablation,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientKind {
    Http,
    Mock,
}

/// Endpoint settings. The auth token is named by environment variable and
/// read at client construction; it never enters any artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ClientKind,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock: Option<MockScript>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineProbabilities {
    pub node_probability: f64,
    pub edge_probability: f64,
}

impl Default for BaselineProbabilities {
    fn default() -> Self {
        Self { node_probability: 0.5, edge_probability: 0.5 }
    }
}

fn default_batch_size() -> usize {
    20
}

fn default_runs() -> usize {
    10
}

fn default_parallelism() -> usize {
    1
}

fn default_ablation_label() -> PostLabel {
    PostLabel::NonInformative
}

/// One declarative file describes the whole experiment; only the output
/// directory comes from the command line, so the persisted snapshot is the
/// complete provenance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub event_name: String,
    /// Row label in reports; defaults to `<model_id>-<mode>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_label: Option<String>,
    pub vocab_file: PathBuf,
    pub reference_file: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_format: Option<CorpusFormat>,
    pub model: ModelConfig,
    pub mode: ExperimentMode,
    #[serde(default = "default_ablation_label")]
    pub ablation_label: PostLabel,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub shuffle_batches: bool,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_refusal_phrases")]
    pub refusal_phrases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineProbabilities>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Fills derivable fields so the persisted snapshot is self-contained.
    pub fn resolved(&self) -> Result<ExperimentConfig, ExperimentError> {
        let mut resolved = self.clone();
        if resolved.condition_label.is_none() {
            let mode = match resolved.mode {
                ExperimentMode::Main => "main",
                ExperimentMode::Ablation => "ablation",
                ExperimentMode::Baseline => "baseline",
            };
            resolved.condition_label = Some(format!("{}-{mode}", resolved.model.model_id));
        }
        if resolved.mode == ExperimentMode::Baseline && resolved.baseline.is_none() {
            resolved.baseline = Some(BaselineProbabilities::default());
        }
        if let Some(path) = &resolved.corpus_file {
            if resolved.corpus_format.is_none() {
                resolved.corpus_format = Some(CorpusFormat::from_path(path)?);
            }
        }
        resolved.validate()?;
        Ok(resolved)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::Config(msg));
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1".into());
        }
        if self.runs < 1 {
            return fail("runs must be at least 1".into());
        }
        if self.parallelism < 1 {
            return fail("parallelism must be at least 1".into());
        }
        if self.sampling.temperature < 0.0 {
            return fail("sampling.temperature must be non-negative".into());
        }
        for (name, path) in [
            ("vocab_file", Some(&self.vocab_file)),
            ("reference_file", Some(&self.reference_file)),
            ("corpus_file", self.corpus_file.as_ref()),
        ] {
            if let Some(path) = path {
                if !path.exists() {
                    return fail(format!("{name} does not exist: {}", path.display()));
                }
            }
        }
        match self.mode {
            ExperimentMode::Baseline => {
                if let Some(probs) = &self.baseline {
                    BaselineConfig::new(probs.node_probability, probs.edge_probability, 0)?;
                }
            }
            ExperimentMode::Main | ExperimentMode::Ablation => {
                if self.corpus_file.is_none() {
                    return fail(format!("{:?} mode requires corpus_file", self.mode));
                }
                match self.model.kind {
                    ClientKind::Http if self.model.endpoint.is_none() => {
                        return fail("http client requires model.endpoint".into());
                    }
                    ClientKind::Mock if self.model.mock.is_none() => {
                        return fail("mock client requires model.mock script".into());
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Stable content address: hex prefix of the SHA-256 of the resolved
    /// config's canonical JSON.
    pub fn content_hash(&self) -> Result<String, ExperimentError> {
        let canonical = serde_json::to_string(self)?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().take(6).map(|b| format!("{b:02x}")).collect())
    }

    fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect()
}

/// Everything loaded and checked before the run loop starts.
struct Prepared {
    config: ExperimentConfig,
    vocab: Arc<CanonicalVocabulary>,
    reference: ReferenceGraph,
    corpus: Option<PostCorpus>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    let config = config.resolved()?;
    let vocab_text = std::fs::read_to_string(&config.vocab_file)?;
    let vocab: Arc<CanonicalVocabulary> = Arc::new(
        serde_json::from_str(&vocab_text)
            .map_err(|e| ExperimentError::Config(format!("vocab_file: {e}")))?,
    );
    let reference = ReferenceGraph::load(&config.reference_file)?;
    if reference.graph().vocabulary().as_ref() != vocab.as_ref() {
        return Err(ExperimentError::Config(
            "reference_file vocabulary differs from vocab_file".into(),
        ));
    }
    if reference.graph().node_count() < 2 {
        return Err(ExperimentError::Config(
            "reference graph needs at least 2 nodes for nSHD".into(),
        ));
    }
    let corpus = match config.mode {
        ExperimentMode::Baseline => None,
        ExperimentMode::Main | ExperimentMode::Ablation => {
            let path = config.corpus_file.as_ref().expect("validated");
            let format = config.corpus_format.expect("resolved");
            let mut corpus = load_corpus(path, format)?;
            corpus.event_name = config.event_name.clone();
            let corpus = corpus.dedupe();
            Some(match config.mode {
                ExperimentMode::Ablation => corpus.filter_by_label(config.ablation_label),
                _ => corpus,
            })
        }
    };
    Ok(Prepared { config, vocab, reference, corpus })
}

fn build_client(model: &ModelConfig) -> Result<Box<dyn ModelClient>, ExperimentError> {
    match model.kind {
        ClientKind::Mock => {
            let script = model
                .mock
                .clone()
                .ok_or_else(|| ExperimentError::Config("mock client requires a script".into()))?;
            Ok(Box::new(MockModelClient::new(script)))
        }
        ClientKind::Http => {
            let endpoint = model
                .endpoint
                .as_deref()
                .ok_or_else(|| ExperimentError::Config("http client requires endpoint".into()))?;
            let client = HttpModelClient::new(endpoint, model.auth_env.as_deref())
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(Box::new(client))
        }
    }
}

/// The persisted artifact of one extraction run: full run configuration
/// (including the derived per-run seed) plus the raw and parsed batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub run_index: usize,
    pub config: RunConfig,
    pub shuffle_seed: Option<u64>,
    pub extraction: ExtractionRun,
}

/// Executes extraction run `run_index` exactly as `run_experiment` would,
/// without touching the filesystem. Only extraction modes apply.
pub fn single_extraction_run(
    config: &ExperimentConfig,
    run_index: usize,
) -> Result<RunArtifact, ExperimentError> {
    let prepared = prepare(config)?;
    if prepared.config.mode == ExperimentMode::Baseline {
        return Err(ExperimentError::Config(
            "extract applies to main/ablation modes; use the baseline command".into(),
        ));
    }
    let client = build_client(&prepared.config.model)?;
    extraction_run(&prepared, client.as_ref(), run_index)
}

fn extraction_run(
    prepared: &Prepared,
    client: &dyn ModelClient,
    run_index: usize,
) -> Result<RunArtifact, ExperimentError> {
    let config = &prepared.config;
    let seed = config.seed_for_run(run_index);
    let corpus = prepared.corpus.as_ref().expect("extraction mode has a corpus");
    let (corpus, shuffle_seed) = if config.shuffle_batches {
        (corpus.shuffled(seed), Some(seed))
    } else {
        (corpus.clone(), None)
    };
    let mut sampling = config.sampling.clone();
    sampling.seed = Some(seed);
    let run_config = RunConfig {
        event_name: config.event_name.clone(),
        model_id: config.model.model_id.clone(),
        batch_size: config.batch_size,
        sampling,
        refusal_phrases: config.refusal_phrases.clone(),
        parallelism: config.parallelism,
    };
    let extraction = extract_run(&run_config, client, &corpus, &prepared.vocab)
        .map_err(|source| ExperimentError::Run { run: run_index, source })?;
    Ok(RunArtifact { run_index, config: run_config, shuffle_seed, extraction })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs the configured experiment end to end and returns the experiment
/// directory. Layout:
///
/// ```text
/// <out>/<label>-<hash>/
///   config.json              resolved configuration snapshot
///   runs/run-000/
///     extraction.json        (main/ablation) or graph.json (baseline)
///     metrics.json
///   aggregate.json
///   aggregate.md
/// ```
pub fn run_experiment(
    config: &ExperimentConfig,
    out_root: &Path,
) -> Result<PathBuf, ExperimentError> {
    let prepared = prepare(config)?;
    let config = prepared.config.clone();
    let label = config.condition_label.clone().expect("resolved");
    let dir = out_root.join(format!("{}-{}", sanitize_label(&label), config.content_hash()?));
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("config.json"), &config)?;

    let mut reports = Vec::with_capacity(config.runs);
    let shared_client = match (config.mode, config.model.kind) {
        (ExperimentMode::Baseline, _) | (_, ClientKind::Mock) => None,
        (_, ClientKind::Http) => Some(build_client(&config.model)?),
    };

    for run_index in 0..config.runs {
        let run_dir = dir.join("runs").join(format!("run-{run_index:03}"));
        std::fs::create_dir_all(&run_dir)?;
        let outcome = match config.mode {
            ExperimentMode::Baseline => {
                let probs = config.baseline.expect("resolved");
                let baseline_config = BaselineConfig::new(
                    probs.node_probability,
                    probs.edge_probability,
                    config.seed_for_run(run_index),
                )?;
                let graph = random_graph(&prepared.vocab, &baseline_config);
                write_json(&run_dir.join("graph.json"), &graph)?;
                RunOutcome::Graph(graph)
            }
            ExperimentMode::Main | ExperimentMode::Ablation => {
                // A fresh mock per run keeps the scripted call sequence
                // aligned with batch indices; the http client is shared.
                let artifact = match config.model.kind {
                    ClientKind::Mock => {
                        let fresh = build_client(&config.model)?;
                        extraction_run(&prepared, fresh.as_ref(), run_index)?
                    }
                    ClientKind::Http => extraction_run(
                        &prepared,
                        shared_client.as_ref().expect("client built").as_ref(),
                        run_index,
                    )?,
                };
                write_json(&run_dir.join("extraction.json"), &artifact)?;
                artifact.extraction.result
            }
        };
        let report = evaluate(prepared.reference.graph(), &outcome)?;
        write_json(&run_dir.join("metrics.json"), &report)?;
        reports.push(report);
    }

    let series = RunSeries::new(label, reports);
    let document = render_report(&[series], &[], StdDevMode::Population)?;
    write_json(&dir.join("aggregate.json"), &document)?;
    std::fs::write(dir.join("aggregate.md"), document.to_markdown())?;
    Ok(dir)
}

/// Recursively collects metric reports for `report --runs`: every immediate
/// subdirectory of `root` is one condition, and every `metrics.json` below
/// it (path-sorted, i.e. run order) contributes one run.
pub fn collect_run_series(root: &Path) -> Result<Vec<RunSeries>, ExperimentError> {
    let mut serieses = Vec::new();
    let mut conditions: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    conditions.sort();
    for condition_dir in conditions {
        let label = condition_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("condition")
            .to_string();
        let mut files = Vec::new();
        collect_metric_files(&condition_dir, &mut files)?;
        files.sort();
        let mut reports = Vec::new();
        for file in files {
            let text = std::fs::read_to_string(&file)?;
            let report: MetricReport = serde_json::from_str(&text).map_err(|e| {
                ExperimentError::Config(format!("{}: {e}", file.display()))
            })?;
            reports.push(report);
        }
        if !reports.is_empty() {
            serieses.push(RunSeries::new(label, reports));
        }
    }
    Ok(serieses)
}

fn collect_metric_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_metric_files(&path, out)?;
        } else if path.file_name().and_then(|n| n.to_str()) == Some("metrics.json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Convenience for `report`: collect, aggregate, compare, render.
pub fn report_from_directory(
    root: &Path,
    comparisons: &[(String, String)],
    mode: StdDevMode,
) -> Result<ReportDocument, ExperimentError> {
    let serieses = collect_run_series(root)?;
    if serieses.is_empty() {
        return Err(ExperimentError::Config(format!(
            "no run series found under {}",
            root.display()
        )));
    }
    Ok(render_report(&serieses, comparisons, mode)?)
}
