//! Harness for grounding and grading LLM-extracted causal graphs from
//! disaster social-media posts.
//!
//! The pipeline has three legs:
//!
//! 1. **Reference compilation** ([`reference`]) — join a disaster-type base
//!    impact graph with a table of expert-report evidence and keep only the
//!    relations the evidence supports.
//! 2. **Extraction** ([`corpus`], [`extraction`]) — batch a post corpus,
//!    render one prompt per batch, call a text-generation endpoint (HTTP or
//!    scripted mock), parse `(Cause, Effect)` pairs out of each response,
//!    and merge batches into one predicted graph per run.
//! 3. **Scoring** ([`baseline`], [`metrics`], [`stats`], [`report`]) —
//!    compare predictions (and seeded random baselines) against the
//!    reference with precision/recall, micro-F1, SHD, and nSHD, then
//!    aggregate runs into mean ± std tables with paired t-tests.
//!
//! [`experiment`] drives all of it from one declarative JSON config.

pub mod baseline;
pub mod corpus;
pub mod experiment;
pub mod extraction;
pub mod graph;
pub mod metrics;
pub mod reference;
pub mod report;
pub mod stats;

pub use baseline::{random_graph, BaselineConfig};
pub use corpus::{load_corpus, CorpusFormat, Post, PostBatch, PostCorpus, PostLabel};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentError, ExperimentMode};
pub use extraction::{
    extract_run, parse_causal_pairs, render_prompt, ExtractionRun, HttpModelClient,
    MockModelClient, ModelClient, PromptRequest, RunConfig, RunOutcome, SamplingParams,
};
pub use graph::{
    reversed_overlap, CanonicalVocabulary, CausalGraph, DirectedEdge, GraphError,
};
pub use metrics::{evaluate, micro_f1, nshd, precision_recall, shd, MetricReport};
pub use reference::{
    prune_by_evidence, validate_table, BaseChain, EvidenceRecord, ReferenceGraph,
    ValidationReport,
};
pub use report::{render_report, ReportDocument};
pub use stats::{aggregate_runs, paired_t_test, Metric, PairedTTest, RunSeries, StdDevMode};
