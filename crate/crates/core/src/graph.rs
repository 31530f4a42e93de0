//! Vocabulary and directed-graph value types shared by the whole pipeline.
//!
//! A [`CanonicalVocabulary`] fixes the universe of variable names for one
//! disaster type. Every [`CausalGraph`] — reference, prediction, or random
//! baseline — lives inside one vocabulary, and all cross-graph operations
//! require the vocabularies to match.
//!
//! Variable names are matched case-insensitively (trim, collapse internal
//! whitespace, case-fold) but stored and displayed in their original casing,
//! since prompts echo the variables verbatim while model output varies in
//! case and spacing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by vocabulary and graph construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vocabulary has no variables")]
    EmptyVocabulary,
    /// Two input names collapsed to the same normalized form.
    /// Carries the normalized (folded) name.
    #[error("duplicate variable after normalization: {0:?}")]
    DuplicateVariable(String),
    #[error("unknown variable: {0:?}")]
    UnknownVariable(String),
    #[error("self-loop on variable: {0:?}")]
    SelfLoop(String),
    #[error("graphs are governed by different vocabularies")]
    VocabularyMismatch,
    /// A node or edge endpoint violated a graph invariant on direct
    /// construction (e.g. when loading a graph file).
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

/// Normalized matching key: trim, collapse internal whitespace, case-fold.
pub fn normalize_name(raw: &str) -> String {
    fold_whitespace(raw).to_lowercase()
}

/// Trim and collapse internal whitespace, preserving case.
fn fold_whitespace(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The fixed, ordered set of variable names for one disaster type.
///
/// Names are stored with their original casing (whitespace-folded) and are
/// unique under [`normalize_name`]. Construction and deserialization both
/// enforce the invariants, so a value of this type is always well formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyData", into = "VocabularyData")]
pub struct CanonicalVocabulary {
    event_type: String,
    variables: Vec<String>,
    normalized: Vec<String>,
}

/// Wire form of a vocabulary: `{"event_type": ..., "variables": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyData {
    event_type: String,
    variables: Vec<String>,
}

impl TryFrom<VocabularyData> for CanonicalVocabulary {
    type Error = GraphError;

    fn try_from(data: VocabularyData) -> Result<Self, GraphError> {
        CanonicalVocabulary::new(data.event_type, data.variables)
    }
}

impl From<CanonicalVocabulary> for VocabularyData {
    fn from(vocab: CanonicalVocabulary) -> Self {
        VocabularyData {
            event_type: vocab.event_type,
            variables: vocab.variables,
        }
    }
}

impl CanonicalVocabulary {
    /// Builds a vocabulary from raw names, folding whitespace and rejecting
    /// normalization collisions. Order is preserved.
    pub fn new(
        event_type: impl Into<String>,
        names: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<Self, GraphError> {
        let mut variables = Vec::new();
        let mut normalized = Vec::new();
        let mut seen = BTreeSet::new();
        for name in names {
            let display = fold_whitespace(name.as_ref());
            let key = display.to_lowercase();
            if key.is_empty() {
                return Err(GraphError::InvalidGraph("empty variable name".into()));
            }
            if !seen.insert(key.clone()) {
                return Err(GraphError::DuplicateVariable(key));
            }
            variables.push(display);
            normalized.push(key);
        }
        if variables.is_empty() {
            return Err(GraphError::EmptyVocabulary);
        }
        Ok(Self {
            event_type: event_type.into(),
            variables,
            normalized,
        })
    }

    pub fn event_type(&self) -> &str {
        &self.event_type
    }

    /// Variable names in declaration order, as echoed into prompts.
    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        false // non-emptiness is a construction invariant
    }

    /// Maps a free-text mention to its canonical variable name. Exact match
    /// after normalization only; no fuzzy matching.
    pub fn resolve(&self, mention: &str) -> Option<&str> {
        let key = normalize_name(mention);
        self.normalized
            .iter()
            .position(|n| *n == key)
            .map(|i| self.variables[i].as_str())
    }

    pub fn contains(&self, mention: &str) -> bool {
        self.resolve(mention).is_some()
    }

    /// Resolves a (cause, effect) pair into a validated edge.
    pub fn edge(&self, cause: &str, effect: &str) -> Result<DirectedEdge, GraphError> {
        let cause = self
            .resolve(cause)
            .ok_or_else(|| GraphError::UnknownVariable(cause.to_string()))?;
        let effect = self
            .resolve(effect)
            .ok_or_else(|| GraphError::UnknownVariable(effect.to_string()))?;
        if cause == effect {
            return Err(GraphError::SelfLoop(cause.to_string()));
        }
        Ok(DirectedEdge {
            cause: cause.to_string(),
            effect: effect.to_string(),
        })
    }
}

/// A directed causal relation between two distinct vocabulary variables.
///
/// Construct through [`CanonicalVocabulary::edge`] so the endpoint and
/// self-loop invariants hold.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub cause: String,
    pub effect: String,
}

impl DirectedEdge {
    /// The same relation with cause and effect swapped.
    pub fn reversed(&self) -> DirectedEdge {
        DirectedEdge {
            cause: self.effect.clone(),
            effect: self.cause.clone(),
        }
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.cause, self.effect)
    }
}

/// A directed graph over a vocabulary: a node subset plus directed edges.
///
/// Nodes may be isolated (random baselines sample nodes independently of
/// edges); every edge endpoint is always a node. `edge_counts`, when present,
/// records how often each edge was observed during batch aggregation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct CausalGraph {
    vocabulary: Arc<CanonicalVocabulary>,
    nodes: BTreeSet<String>,
    edges: BTreeSet<DirectedEdge>,
    edge_counts: Option<BTreeMap<DirectedEdge, u64>>,
}

/// Wire form of a graph. Edges carry an optional occurrence count:
/// `{"vocabulary": {...}, "nodes": [...], "edges": [{"cause", "effect", "count"?}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphData {
    vocabulary: CanonicalVocabulary,
    nodes: Vec<String>,
    edges: Vec<GraphEdgeData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphEdgeData {
    cause: String,
    effect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<u64>,
}

impl TryFrom<GraphData> for CausalGraph {
    type Error = GraphError;

    fn try_from(data: GraphData) -> Result<Self, GraphError> {
        let vocab = Arc::new(data.vocabulary);
        let mut nodes = BTreeSet::new();
        for name in &data.nodes {
            let canonical = vocab
                .resolve(name)
                .ok_or_else(|| GraphError::UnknownVariable(name.clone()))?;
            nodes.insert(canonical.to_string());
        }
        let mut edges = BTreeSet::new();
        let mut counts = BTreeMap::new();
        let mut any_count = false;
        for e in &data.edges {
            let edge = vocab.edge(&e.cause, &e.effect)?;
            if let Some(c) = e.count {
                any_count = true;
                *counts.entry(edge.clone()).or_insert(0) += c;
            }
            edges.insert(edge);
        }
        let edge_counts = any_count.then_some(counts);
        CausalGraph::from_parts(vocab, nodes, edges, edge_counts)
    }
}

impl From<CausalGraph> for GraphData {
    fn from(graph: CausalGraph) -> Self {
        let edges = graph
            .edges
            .iter()
            .map(|edge| GraphEdgeData {
                cause: edge.cause.clone(),
                effect: edge.effect.clone(),
                count: graph
                    .edge_counts
                    .as_ref()
                    .and_then(|c| c.get(edge).copied()),
            })
            .collect();
        GraphData {
            vocabulary: (*graph.vocabulary).clone(),
            nodes: graph.nodes.into_iter().collect(),
            edges,
        }
    }
}

impl CausalGraph {
    /// Builds a graph from raw (cause, effect) name pairs; the node set is
    /// exactly the edge endpoints. Duplicate pairs are merged and counted.
    pub fn from_edge_list<C, E>(
        vocabulary: Arc<CanonicalVocabulary>,
        pairs: impl IntoIterator<Item = (C, E)>,
    ) -> Result<Self, GraphError>
    where
        C: AsRef<str>,
        E: AsRef<str>,
    {
        let mut edges = BTreeSet::new();
        let mut counts: BTreeMap<DirectedEdge, u64> = BTreeMap::new();
        let mut nodes = BTreeSet::new();
        for (cause, effect) in pairs {
            let edge = vocabulary.edge(cause.as_ref(), effect.as_ref())?;
            nodes.insert(edge.cause.clone());
            nodes.insert(edge.effect.clone());
            *counts.entry(edge.clone()).or_insert(0) += 1;
            edges.insert(edge);
        }
        Ok(Self {
            vocabulary,
            nodes,
            edges,
            edge_counts: Some(counts),
        })
    }

    /// Assembles a graph from already-resolved parts, checking invariants:
    /// nodes within the vocabulary, every edge endpoint a node, and counts
    /// (when present) covering exactly the edge set.
    pub fn from_parts(
        vocabulary: Arc<CanonicalVocabulary>,
        nodes: BTreeSet<String>,
        edges: BTreeSet<DirectedEdge>,
        edge_counts: Option<BTreeMap<DirectedEdge, u64>>,
    ) -> Result<Self, GraphError> {
        for node in &nodes {
            if vocabulary.resolve(node) != Some(node.as_str()) {
                return Err(GraphError::UnknownVariable(node.clone()));
            }
        }
        for edge in &edges {
            if edge.cause == edge.effect {
                return Err(GraphError::SelfLoop(edge.cause.clone()));
            }
            if !nodes.contains(&edge.cause) || !nodes.contains(&edge.effect) {
                return Err(GraphError::InvalidGraph(format!(
                    "edge {edge} has an endpoint outside the node set"
                )));
            }
        }
        if let Some(counts) = &edge_counts {
            if counts.keys().any(|e| !edges.contains(e)) {
                return Err(GraphError::InvalidGraph(
                    "edge count for an edge not in the graph".into(),
                ));
            }
        }
        Ok(Self {
            vocabulary,
            nodes,
            edges,
            edge_counts,
        })
    }

    /// An empty graph (no nodes, no edges) over the vocabulary.
    pub fn empty(vocabulary: Arc<CanonicalVocabulary>) -> Self {
        Self {
            vocabulary,
            nodes: BTreeSet::new(),
            edges: BTreeSet::new(),
            edge_counts: None,
        }
    }

    pub fn vocabulary(&self) -> &Arc<CanonicalVocabulary> {
        &self.vocabulary
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<DirectedEdge> {
        &self.edges
    }

    pub fn edge_counts(&self) -> Option<&BTreeMap<DirectedEdge, u64>> {
        self.edge_counts.as_ref()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_edge(&self, edge: &DirectedEdge) -> bool {
        self.edges.contains(edge)
    }

    pub fn same_vocabulary(&self, other: &CausalGraph) -> bool {
        self.vocabulary == other.vocabulary
    }
}

/// Reference edges whose reversal is predicted:
/// all `(u, v)` in the reference with `(v, u)` among the predictions.
pub fn reversed_overlap(
    reference: &CausalGraph,
    prediction: &CausalGraph,
) -> Result<BTreeSet<DirectedEdge>, GraphError> {
    if !reference.same_vocabulary(prediction) {
        return Err(GraphError::VocabularyMismatch);
    }
    Ok(reference
        .edges()
        .iter()
        .filter(|edge| prediction.contains_edge(&edge.reversed()))
        .cloned()
        .collect())
}
