//! Prompt-driven causal relation extraction: renders one prompt per post
//! batch, calls a [`ModelClient`], parses directed pairs out of each
//! response, and folds the batches into one predicted graph per run.

mod client;
mod parse;
mod prompt;

pub use client::{
    ClientError, HttpModelClient, MockModelClient, MockScript, ModelClient, PromptRequest,
    SamplingParams,
};
pub use parse::{
    default_refusal_phrases, parse_causal_pairs, ParsedResponse, RejectedMention,
    DEFAULT_REFUSAL_PHRASES,
};
pub use prompt::render_prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, PostCorpus};
use crate::graph::{CanonicalVocabulary, CausalGraph, GraphError};

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("batch {batch_index} is empty")]
    EmptyBatch { batch_index: usize },
    /// The run aborts on the first failed batch; a partial run is never
    /// returned.
    #[error("client failed on batch {batch_index}: {source}")]
    Client {
        batch_index: usize,
        #[source]
        source: ClientError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Per-run extraction settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub event_name: String,
    pub model_id: String,
    pub batch_size: usize,
    pub sampling: SamplingParams,
    /// Phrases that mark a zero-pair response as a refusal.
    pub refusal_phrases: Vec<String>,
    /// Upper bound on concurrently in-flight batches.
    pub parallelism: usize,
}

impl RunConfig {
    pub fn new(event_name: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            event_name: event_name.into(),
            model_id: model_id.into(),
            batch_size: 20,
            sampling: SamplingParams::default(),
            refusal_phrases: default_refusal_phrases(),
            parallelism: 1,
        }
    }
}

/// What one batch produced: the raw response plus the parsed view of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchExtraction {
    pub batch_index: usize,
    pub raw_response: String,
    pub accepted_edges: Vec<crate::graph::DirectedEdge>,
    pub rejected_mentions: Vec<RejectedMention>,
    pub refused: bool,
}

/// Final outcome of a run: an aggregated graph, or a refusal when at least
/// one batch refused and no batch produced an accepted edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunOutcome {
    Graph(CausalGraph),
    Refusal,
}

impl RunOutcome {
    pub fn graph(&self) -> Option<&CausalGraph> {
        match self {
            RunOutcome::Graph(g) => Some(g),
            RunOutcome::Refusal => None,
        }
    }

    pub fn is_refusal(&self) -> bool {
        matches!(self, RunOutcome::Refusal)
    }
}

/// One complete extraction run over a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub event_name: String,
    pub model_id: String,
    pub batches: Vec<BatchExtraction>,
    pub result: RunOutcome,
}

/// Runs extraction over every batch of `corpus` and aggregates the results.
///
/// Batches may be dispatched concurrently up to `config.parallelism`;
/// results are joined by batch index, so the outcome does not depend on
/// scheduling. Aggregation merges duplicate edges and sums occurrence
/// counts across (and within) batches.
pub fn extract_run(
    config: &RunConfig,
    client: &dyn ModelClient,
    corpus: &PostCorpus,
    vocab: &Arc<CanonicalVocabulary>,
) -> Result<ExtractionRun, ExtractionError> {
    let batches = corpus.batched(config.batch_size)?;
    let workers = config.parallelism.max(1).min(batches.len().max(1));

    let slots: Mutex<Vec<Option<Result<BatchExtraction, ExtractionError>>>> =
        Mutex::new((0..batches.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= batches.len() {
                    break;
                }
                let outcome = run_batch(config, client, vocab, &batches[i]);
                slots.lock().expect("batch slot lock")[i] = Some(outcome);
            });
        }
    });

    let mut extractions = Vec::with_capacity(batches.len());
    for slot in slots.into_inner().expect("batch slot lock") {
        extractions.push(slot.expect("all batches processed")?);
    }

    let any_refused = extractions.iter().any(|b| b.refused);
    let accepted: Vec<_> = extractions
        .iter()
        .flat_map(|b| b.accepted_edges.iter())
        .map(|e| (e.cause.clone(), e.effect.clone()))
        .collect();

    let result = if any_refused && accepted.is_empty() {
        RunOutcome::Refusal
    } else {
        RunOutcome::Graph(CausalGraph::from_edge_list(vocab.clone(), accepted)?)
    };

    Ok(ExtractionRun {
        event_name: config.event_name.clone(),
        model_id: config.model_id.clone(),
        batches: extractions,
        result,
    })
}

fn run_batch(
    config: &RunConfig,
    client: &dyn ModelClient,
    vocab: &CanonicalVocabulary,
    batch: &crate::corpus::PostBatch,
) -> Result<BatchExtraction, ExtractionError> {
    let prompt = render_prompt(&config.event_name, vocab, batch)?;
    let request = PromptRequest {
        model_id: config.model_id.clone(),
        prompt,
        sampling: config.sampling.clone(),
    };
    let raw_response = client
        .complete(&request)
        .map_err(|source| ExtractionError::Client { batch_index: batch.index, source })?;
    let parsed = parse_causal_pairs(&raw_response, vocab, &config.refusal_phrases);
    Ok(BatchExtraction {
        batch_index: batch.index,
        raw_response,
        accepted_edges: parsed.edges,
        rejected_mentions: parsed.rejected,
        refused: parsed.refused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Post, PostLabel};

    fn vocab() -> Arc<CanonicalVocabulary> {
        Arc::new(CanonicalVocabulary::new("Tropical Cyclone", ["A", "B", "C"]).unwrap())
    }

    fn corpus(n: usize) -> PostCorpus {
        PostCorpus::new(
            "Hurricane Irma",
            (0..n)
                .map(|i| Post {
                    post_id: format!("p{i}"),
                    text: format!("post number {i}"),
                    label: PostLabel::Unlabeled,
                })
                .collect(),
        )
    }

    fn config(batch_size: usize) -> RunConfig {
        let mut cfg = RunConfig::new("Hurricane Irma", "mock-model");
        cfg.batch_size = batch_size;
        cfg
    }

    fn edge(cause: &str, effect: &str) -> crate::graph::DirectedEdge {
        crate::graph::DirectedEdge { cause: cause.into(), effect: effect.into() }
    }

    #[test]
    fn duplicate_edges_merge_with_counts() {
        let client = MockModelClient::constant("(A, B)");
        let run = extract_run(&config(2), &client, &corpus(6), &vocab()).unwrap();
        assert_eq!(run.batches.len(), 3);
        let graph = run.result.graph().unwrap();
        assert_eq!(graph.edge_count(), 1);
        assert_eq!(graph.edge_counts().unwrap()[&edge("A", "B")], 3);
    }

    #[test]
    fn distinct_batches_union() {
        let client = MockModelClient::sequence(["(A, B)", "(B, C)"]);
        let run = extract_run(&config(3), &client, &corpus(6), &vocab()).unwrap();
        let graph = run.result.graph().unwrap();
        assert_eq!(graph.edge_count(), 2);
        let counts = graph.edge_counts().unwrap();
        assert_eq!(counts[&edge("A", "B")], 1);
        assert_eq!(counts[&edge("B", "C")], 1);
    }

    #[test]
    fn all_refusals_yield_refusal_outcome() {
        let client = MockModelClient::constant("I cannot find causal relations here.");
        let run = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap();
        assert!(run.result.is_refusal());
        assert!(run.batches.iter().all(|b| b.refused));
    }

    #[test]
    fn one_refusal_with_zero_edges_overall_is_a_refusal() {
        let client = MockModelClient::sequence(["insufficient evidence", "nothing here"]);
        let run = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap();
        assert!(run.result.is_refusal());
    }

    #[test]
    fn refusal_language_plus_edges_elsewhere_is_an_ordinary_run() {
        let client = MockModelClient::sequence(["insufficient evidence", "(A, C)"]);
        let run = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap();
        let graph = run.result.graph().unwrap();
        assert_eq!(graph.edge_count(), 1);
    }

    #[test]
    fn zero_edges_without_refusal_is_an_empty_prediction() {
        let client = MockModelClient::constant("The posts only mention the weather.");
        let run = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap();
        let graph = run.result.graph().unwrap();
        assert_eq!(graph.edge_count(), 0);
        assert_eq!(graph.node_count(), 0);
    }

    #[test]
    fn client_failure_aborts_the_run() {
        let client = MockModelClient::sequence(["(A, B)"]);
        let err = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap_err();
        match err {
            ExtractionError::Client { batch_index, .. } => assert_eq!(batch_index, 1),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parallel_dispatch_matches_sequential() {
        // Key responses off the prompt content so ordering cannot matter.
        let scripted = |req: &PromptRequest| {
            if req.prompt.contains("post number 0") {
                Ok("(A, B)".to_string())
            } else if req.prompt.contains("post number 2") {
                Ok("(B, C)".to_string())
            } else {
                Ok("(A, C) (A, B)".to_string())
            }
        };
        let mut sequential = config(2);
        sequential.parallelism = 1;
        let mut parallel = config(2);
        parallel.parallelism = 4;
        let run_seq = extract_run(&sequential, &scripted, &corpus(6), &vocab()).unwrap();
        let run_par = extract_run(&parallel, &scripted, &corpus(6), &vocab()).unwrap();
        assert_eq!(run_seq, run_par);
    }

    #[test]
    fn run_is_byte_reproducible() {
        let run = || {
            let client = MockModelClient::sequence(["(A, B) (B, C)", "(A, B)"]);
            let mut cfg = config(2);
            cfg.sampling.seed = Some(41);
            extract_run(&cfg, &client, &corpus(4), &vocab()).unwrap()
        };
        let a = serde_json::to_string_pretty(&run()).unwrap();
        let b = serde_json::to_string_pretty(&run()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn run_artifact_round_trips() {
        let client = MockModelClient::sequence(["(A, B) oops (A, A) (Z, B)", "no causal content"]);
        let run = extract_run(&config(2), &client, &corpus(4), &vocab()).unwrap();
        let json = serde_json::to_string_pretty(&run).unwrap();
        let back: ExtractionRun = serde_json::from_str(&json).unwrap();
        assert_eq!(run, back);
        assert_eq!(run.batches[0].rejected_mentions.len(), 2);
    }

    #[test]
    fn refusal_outcome_round_trips() {
        let outcome = RunOutcome::Refusal;
        let json = serde_json::to_string(&outcome).unwrap();
        assert_eq!(json, r#"{"kind":"refusal"}"#);
        let back: RunOutcome = serde_json::from_str(&json).unwrap();
        assert!(back.is_refusal());
    }
}
