//! Graph comparison metrics: node/edge precision and recall, micro-averaged
//! F1, structural Hamming distance with reversed-edge correction, and its
//! normalized form.
//!
//! All scores are pure set arithmetic over a shared vocabulary. Counts stay
//! in exact integer form and each score is produced by a single terminal
//! division, so results are deterministic across platforms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::RunOutcome;
use crate::graph::CausalGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("graphs are governed by different vocabularies")]
    VocabularyMismatch,
    /// nSHD needs at least two reference variables for its denominator.
    #[error("reference graph has {node_count} nodes; nSHD needs at least 2")]
    DegenerateReference { node_count: usize },
}

/// Intersection-over-prediction and intersection-over-reference.
///
/// Conventions for the 0/0 cases: an empty prediction against a non-empty
/// reference scores precision 0, an empty reference against a non-empty
/// prediction scores recall 0, and two empty sets score 1 on both.
pub fn precision_recall<T: Ord>(ref_set: &BTreeSet<T>, pred_set: &BTreeSet<T>) -> (f64, f64) {
    let hits = ref_set.intersection(pred_set).count();
    let precision = match (pred_set.len(), ref_set.len()) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        (n, _) => hits as f64 / n as f64,
    };
    let recall = match (ref_set.len(), pred_set.len()) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        (n, _) => hits as f64 / n as f64,
    };
    (precision, recall)
}

/// Micro-averaged F1 across nodes and edges:
/// `2(|V∩| + |E∩|) / (|V_ref| + |E_ref| + |V_pred| + |E_pred|)`.
/// Two empty graphs are identical and score 1.
pub fn micro_f1(reference: &CausalGraph, prediction: &CausalGraph) -> Result<f64, MetricError> {
    check_vocabulary(reference, prediction)?;
    let node_hits = reference.nodes().intersection(prediction.nodes()).count();
    let edge_hits = reference.edges().intersection(prediction.edges()).count();
    let denominator = reference.node_count()
        + reference.edge_count()
        + prediction.node_count()
        + prediction.edge_count();
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * (node_hits + edge_hits) as f64 / denominator as f64)
}

/// Structural Hamming distance: the number of edge edits (insert, delete,
/// reverse) transforming the predicted edge set into the reference edge set,
/// with a reversal counting as one edit.
///
/// Computed as the size of the symmetric difference minus the number of
/// reversal pairs within it — i.e. pairs `(u,v) ∈ E_ref∖E_pred` with
/// `(v,u) ∈ E_pred∖E_ref`, each of which a single reverse repairs. Only
/// reversals inside the difference sets qualify: when a graph contains both
/// directions of a relation, the shared direction is already in agreement
/// and reversing it would not help. This equals the exact minimum edit count
/// (the edit moves decompose per unordered variable pair).
pub fn shd(reference: &CausalGraph, prediction: &CausalGraph) -> Result<u64, MetricError> {
    check_vocabulary(reference, prediction)?;
    let ref_only: BTreeSet<_> = reference.edges().difference(prediction.edges()).collect();
    let pred_only: BTreeSet<_> = prediction.edges().difference(reference.edges()).collect();
    let reversals = ref_only
        .iter()
        .filter(|edge| pred_only.contains(&edge.reversed()))
        .count();
    Ok((ref_only.len() + pred_only.len() - reversals) as u64)
}

/// SHD normalized by the number of possible directed edges among reference
/// variables: `shd / (|V_ref| · (|V_ref| − 1))`.
pub fn nshd(reference: &CausalGraph, prediction: &CausalGraph) -> Result<f64, MetricError> {
    let k = reference.node_count();
    if k < 2 {
        return Err(MetricError::DegenerateReference { node_count: k });
    }
    let distance = shd(reference, prediction)?;
    Ok(distance as f64 / (k * (k - 1)) as f64)
}

/// The seven scores for one (reference, prediction) pair. A refused
/// prediction reports `refused = true` and every score as absent (rendered
/// as N/A); otherwise all seven are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub node_precision: Option<f64>,
    pub node_recall: Option<f64>,
    pub edge_precision: Option<f64>,
    pub edge_recall: Option<f64>,
    pub f1: Option<f64>,
    pub shd: Option<u64>,
    pub nshd: Option<f64>,
    pub refused: bool,
}

impl MetricReport {
    /// The all-N/A report for a refused run.
    pub fn refusal() -> Self {
        Self {
            node_precision: None,
            node_recall: None,
            edge_precision: None,
            edge_recall: None,
            f1: None,
            shd: None,
            nshd: None,
            refused: true,
        }
    }
}

/// Scores a run outcome against the reference graph. Refusals produce the
/// all-N/A report; graphs get all seven scores.
pub fn evaluate(reference: &CausalGraph, prediction: &RunOutcome) -> Result<MetricReport, MetricError> {
    let graph = match prediction {
        RunOutcome::Refusal => return Ok(MetricReport::refusal()),
        RunOutcome::Graph(graph) => graph,
    };
    check_vocabulary(reference, graph)?;
    let (node_precision, node_recall) = precision_recall(reference.nodes(), graph.nodes());
    let (edge_precision, edge_recall) = precision_recall(reference.edges(), graph.edges());
    let f1 = micro_f1(reference, graph)?;
    let distance = shd(reference, graph)?;
    let normalized = nshd(reference, graph)?;
    Ok(MetricReport {
        node_precision: Some(node_precision),
        node_recall: Some(node_recall),
        edge_precision: Some(edge_precision),
        edge_recall: Some(edge_recall),
        f1: Some(f1),
        shd: Some(distance),
        nshd: Some(normalized),
        refused: false,
    })
}

fn check_vocabulary(a: &CausalGraph, b: &CausalGraph) -> Result<(), MetricError> {
    if a.same_vocabulary(b) {
        Ok(())
    } else {
        Err(MetricError::VocabularyMismatch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CanonicalVocabulary;
    use std::sync::Arc;

    fn vocab(names: &[&str]) -> Arc<CanonicalVocabulary> {
        Arc::new(CanonicalVocabulary::new("Tropical Cyclone", names).unwrap())
    }

    fn graph(v: &Arc<CanonicalVocabulary>, edges: &[(&str, &str)]) -> CausalGraph {
        CausalGraph::from_edge_list(v.clone(), edges.iter().copied()).unwrap()
    }

    /// The worked 4-variable pair used across the metric tests.
    fn worked_pair() -> (CausalGraph, CausalGraph) {
        let v = vocab(&["A", "B", "C", "D"]);
        let reference = graph(&v, &[("A", "C"), ("B", "C"), ("C", "D")]);
        let prediction = graph(&v, &[("A", "C"), ("C", "B"), ("D", "C")]);
        (reference, prediction)
    }

    #[test]
    fn precision_recall_set_arithmetic() {
        let r: BTreeSet<_> = ["a", "b", "c"].into_iter().collect();
        let p: BTreeSet<_> = ["b", "c", "d"].into_iter().collect();
        assert_eq!(precision_recall(&r, &p), (2.0 / 3.0, 2.0 / 3.0));
    }

    #[test]
    fn identical_nonempty_sets_are_perfect() {
        let r: BTreeSet<_> = ["a", "b"].into_iter().collect();
        assert_eq!(precision_recall(&r, &r.clone()), (1.0, 1.0));
    }

    #[test]
    fn empty_prediction_convention() {
        let r: BTreeSet<_> = ["a"].into_iter().collect();
        let p: BTreeSet<&str> = BTreeSet::new();
        assert_eq!(precision_recall(&r, &p), (0.0, 0.0));
    }

    #[test]
    fn both_empty_convention() {
        let e: BTreeSet<&str> = BTreeSet::new();
        assert_eq!(precision_recall(&e, &e.clone()), (1.0, 1.0));
    }

    #[test]
    fn micro_f1_identity() {
        let (reference, _) = worked_pair();
        assert_eq!(micro_f1(&reference, &reference).unwrap(), 1.0);
    }

    #[test]
    fn micro_f1_worked_example() {
        let (reference, prediction) = worked_pair();
        // 2(4 + 1) / (4 + 3 + 4 + 3)
        assert_eq!(micro_f1(&reference, &prediction).unwrap(), 10.0 / 14.0);
    }

    #[test]
    fn micro_f1_disjoint_is_zero() {
        let v = vocab(&["A", "B", "C", "D"]);
        let r = graph(&v, &[("A", "B")]);
        let p = graph(&v, &[("C", "D")]);
        assert_eq!(micro_f1(&r, &p).unwrap(), 0.0);
    }

    #[test]
    fn shd_identity_is_zero() {
        let (reference, _) = worked_pair();
        assert_eq!(shd(&reference, &reference).unwrap(), 0);
    }

    #[test]
    fn shd_worked_example() {
        let (reference, prediction) = worked_pair();
        // two differing pairs, both repairable by one reversal each
        assert_eq!(shd(&reference, &prediction).unwrap(), 2);
    }

    #[test]
    fn shd_single_insertion() {
        let v = vocab(&["A", "B"]);
        let r = graph(&v, &[("A", "B")]);
        let p = graph(&v, &[]);
        assert_eq!(shd(&r, &p).unwrap(), 1);
    }

    #[test]
    fn shd_two_cycle_agreement_needs_one_insert() {
        // Reference holds both directions, prediction only one: the shared
        // direction must not be double-counted as a reversal saving.
        let v = vocab(&["A", "B"]);
        let r = graph(&v, &[("A", "B"), ("B", "A")]);
        let p = graph(&v, &[("A", "B")]);
        assert_eq!(shd(&r, &p).unwrap(), 1);
    }

    #[test]
    fn shd_extra_reverse_direction_needs_one_delete() {
        let v = vocab(&["A", "B"]);
        let r = graph(&v, &[("A", "B")]);
        let p = graph(&v, &[("A", "B"), ("B", "A")]);
        assert_eq!(shd(&r, &p).unwrap(), 1);
    }

    #[test]
    fn nshd_worked_example() {
        let (reference, prediction) = worked_pair();
        assert_eq!(nshd(&reference, &prediction).unwrap(), 2.0 / 12.0);
    }

    #[test]
    fn nshd_identity_is_zero() {
        let (reference, _) = worked_pair();
        assert_eq!(nshd(&reference, &reference).unwrap(), 0.0);
    }

    #[test]
    fn nshd_degenerate_reference() {
        let v = vocab(&["A", "B"]);
        let r = CausalGraph::empty(v.clone());
        let p = graph(&v, &[("A", "B")]);
        assert!(matches!(
            nshd(&r, &p).unwrap_err(),
            MetricError::DegenerateReference { node_count: 0 }
        ));
    }

    #[test]
    fn eight_node_reference_divides_by_56() {
        let names: Vec<String> = (0..8).map(|i| format!("v{i}")).collect();
        let v = vocab(&names.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        let pairs: Vec<(String, String)> =
            (0..7).map(|i| (format!("v{i}"), format!("v{}", i + 1))).collect();
        let r = CausalGraph::from_edge_list(v.clone(), pairs).unwrap();
        assert_eq!(r.node_count(), 8);
        let p = graph(&v, &[("v0", "v1"), ("v3", "v2")]);
        let d = shd(&r, &p).unwrap();
        assert_eq!(nshd(&r, &p).unwrap(), d as f64 / 56.0);
    }

    #[test]
    fn evaluate_refusal_is_all_na() {
        let (reference, _) = worked_pair();
        let report = evaluate(&reference, &RunOutcome::Refusal).unwrap();
        assert!(report.refused);
        assert_eq!(report.node_precision, None);
        assert_eq!(report.shd, None);
        assert_eq!(report.nshd, None);
    }

    #[test]
    fn evaluate_identity_is_perfect() {
        let (reference, _) = worked_pair();
        let report = evaluate(&reference, &RunOutcome::Graph(reference.clone())).unwrap();
        assert_eq!(report.node_precision, Some(1.0));
        assert_eq!(report.node_recall, Some(1.0));
        assert_eq!(report.edge_precision, Some(1.0));
        assert_eq!(report.edge_recall, Some(1.0));
        assert_eq!(report.f1, Some(1.0));
        assert_eq!(report.shd, Some(0));
        assert_eq!(report.nshd, Some(0.0));
    }

    #[test]
    fn evaluate_worked_example() {
        let (reference, prediction) = worked_pair();
        let report = evaluate(&reference, &RunOutcome::Graph(prediction)).unwrap();
        assert_eq!(report.node_precision, Some(1.0));
        assert_eq!(report.node_recall, Some(1.0));
        assert_eq!(report.edge_precision, Some(1.0 / 3.0));
        assert_eq!(report.edge_recall, Some(1.0 / 3.0));
        assert_eq!(report.f1, Some(10.0 / 14.0));
        assert_eq!(report.shd, Some(2));
        assert_eq!(report.nshd, Some(2.0 / 12.0));
    }

    #[test]
    fn evaluate_rejects_vocabulary_mismatch() {
        let (reference, _) = worked_pair();
        let other = graph(&vocab(&["A", "B"]), &[("A", "B")]);
        assert_eq!(
            evaluate(&reference, &RunOutcome::Graph(other)).unwrap_err(),
            MetricError::VocabularyMismatch
        );
    }

    #[test]
    fn out_of_reference_predictions_still_penalize_precision() {
        let v = vocab(&["A", "B", "C", "D"]);
        let r = graph(&v, &[("A", "B")]);
        let p = graph(&v, &[("A", "B"), ("C", "D")]);
        let report = evaluate(&r, &RunOutcome::Graph(p)).unwrap();
        assert_eq!(report.edge_precision, Some(0.5));
        assert_eq!(report.edge_recall, Some(1.0));
        // the out-of-reference edge still costs one deletion
        assert_eq!(report.shd, Some(1));
    }

    #[test]
    fn report_json_round_trips() {
        let (reference, prediction) = worked_pair();
        let report = evaluate(&reference, &RunOutcome::Graph(prediction)).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }
}
