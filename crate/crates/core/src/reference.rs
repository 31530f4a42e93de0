//! Compiles expert-grounded reference graphs by the match-and-record
//! procedure: start from a disaster-type base chain, join it with a table of
//! report evidence, and keep only the edges a record explicitly supports.
//!
//! The base chain fixes the level of abstraction: records for edges it does
//! not contain are hard errors, never silently added relations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CanonicalVocabulary, CausalGraph, DirectedEdge, GraphError};

#[derive(Debug, Error)]
pub enum ReferenceError {
    /// Evidence was recorded for a directed edge absent from the base chain.
    #[error("record {row}: edge ({cause}, {effect}) is not in the base chain")]
    RecordNotInBase {
        row: usize,
        cause: String,
        effect: String,
    },
    #[error("record {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("evidence table: {0}")]
    Table(String),
    #[error("evidence table: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// The disaster-type-generic impact graph: the initial variables and edges
/// that event-specific evidence is matched against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BaseChainData", into = "BaseChainData")]
pub struct BaseChain {
    vocabulary: Arc<CanonicalVocabulary>,
    edges: BTreeSet<DirectedEdge>,
}

/// Wire form: `{"event_type", "variables": [...], "edges": [["cause","effect"], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BaseChainData {
    event_type: String,
    variables: Vec<String>,
    edges: Vec<(String, String)>,
}

impl TryFrom<BaseChainData> for BaseChain {
    type Error = GraphError;

    fn try_from(data: BaseChainData) -> Result<Self, GraphError> {
        let vocabulary = Arc::new(CanonicalVocabulary::new(data.event_type, data.variables)?);
        let mut edges = BTreeSet::new();
        for (cause, effect) in &data.edges {
            edges.insert(vocabulary.edge(cause, effect)?);
        }
        Ok(BaseChain { vocabulary, edges })
    }
}

impl From<BaseChain> for BaseChainData {
    fn from(base: BaseChain) -> Self {
        BaseChainData {
            event_type: base.vocabulary.event_type().to_string(),
            variables: base.vocabulary.variables().to_vec(),
            edges: base
                .edges
                .iter()
                .map(|e| (e.cause.clone(), e.effect.clone()))
                .collect(),
        }
    }
}

impl BaseChain {
    pub fn new(
        vocabulary: Arc<CanonicalVocabulary>,
        pairs: impl IntoIterator<Item = (impl AsRef<str>, impl AsRef<str>)>,
    ) -> Result<Self, GraphError> {
        let mut edges = BTreeSet::new();
        for (cause, effect) in pairs {
            edges.insert(vocabulary.edge(cause.as_ref(), effect.as_ref())?);
        }
        Ok(Self { vocabulary, edges })
    }

    pub fn vocabulary(&self) -> &Arc<CanonicalVocabulary> {
        &self.vocabulary
    }

    pub fn edges(&self) -> &BTreeSet<DirectedEdge> {
        &self.edges
    }

    pub fn load(path: &Path) -> Result<Self, ReferenceError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One expert-report citation backing one directed relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub cause: String,
    pub effect: String,
    pub quote: String,
    pub source: String,
    pub locator: String,
}

/// Reads an evidence table: UTF-8 TSV with header
/// `cause <tab> effect <tab> quote <tab> source <tab> locator`.
pub fn load_evidence_table(path: &Path) -> Result<Vec<EvidenceRecord>, ReferenceError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .flexible(false)
        .from_path(path)?;
    let headers = reader.headers().map_err(|e| ReferenceError::Table(e.to_string()))?;
    for required in ["cause", "effect", "quote", "source", "locator"] {
        if !headers.iter().any(|h| h == required) {
            return Err(ReferenceError::Table(format!("missing column {required:?}")));
        }
    }
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<EvidenceRecord>().enumerate() {
        let record = row.map_err(|e| ReferenceError::InvalidRecord {
            row: i,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// A problem found while machine-checking an evidence table. Problems are
/// data, not faults: validation never fails, it reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableProblem {
    /// 0-based row index into the record list.
    pub row: usize,
    pub kind: ProblemKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    UnknownVariable,
    SelfLoop,
    EdgeNotInBase,
    EmptyQuote,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ProblemKind::UnknownVariable => "UnknownVariable",
            ProblemKind::SelfLoop => "SelfLoop",
            ProblemKind::EdgeNotInBase => "EdgeNotInBase",
            ProblemKind::EmptyQuote => "EmptyQuote",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub problems: Vec<TableProblem>,
}

impl ValidationReport {
    /// A table is compilable iff the report is empty.
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Checks every record against the base chain without mutating anything:
/// unknown variables, self-loops, edges missing from the base, empty quotes.
pub fn validate_table(base: &BaseChain, table: &[EvidenceRecord]) -> ValidationReport {
    let mut problems = Vec::new();
    for (row, record) in table.iter().enumerate() {
        if record.quote.trim().is_empty() {
            problems.push(TableProblem {
                row,
                kind: ProblemKind::EmptyQuote,
                detail: "quote is empty".into(),
            });
        }
        match base.vocabulary.edge(&record.cause, &record.effect) {
            Err(GraphError::UnknownVariable(name)) => problems.push(TableProblem {
                row,
                kind: ProblemKind::UnknownVariable,
                detail: format!("variable {name:?} is not in the vocabulary"),
            }),
            Err(GraphError::SelfLoop(name)) => problems.push(TableProblem {
                row,
                kind: ProblemKind::SelfLoop,
                detail: format!("cause and effect are both {name:?}"),
            }),
            Err(other) => problems.push(TableProblem {
                row,
                kind: ProblemKind::UnknownVariable,
                detail: other.to_string(),
            }),
            Ok(edge) => {
                if !base.edges.contains(&edge) {
                    problems.push(TableProblem {
                        row,
                        kind: ProblemKind::EdgeNotInBase,
                        detail: format!("edge {edge} is not in the base chain"),
                    });
                }
            }
        }
    }
    ValidationReport { problems }
}

/// The expert-grounded reference graph for one event: every edge is backed
/// by at least one evidence record, and nodes are exactly the endpoints of
/// the retained edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceGraph {
    event_name: String,
    graph: CausalGraph,
    evidence: BTreeMap<DirectedEdge, Vec<EvidenceRecord>>,
}

impl ReferenceGraph {
    pub fn event_name(&self) -> &str {
        &self.event_name
    }

    pub fn graph(&self) -> &CausalGraph {
        &self.graph
    }

    pub fn evidence(&self) -> &BTreeMap<DirectedEdge, Vec<EvidenceRecord>> {
        &self.evidence
    }

    pub fn load(path: &Path) -> Result<Self, ReferenceError> {
        let text = std::fs::read_to_string(path)?;
        let data: ReferenceGraphData = serde_json::from_str(&text)?;
        data.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<(), ReferenceError> {
        let data: ReferenceGraphData = self.clone().into();
        let mut text = serde_json::to_string_pretty(&data)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Wire form of a reference graph:
/// `{"event_name", "vocabulary": {...}, "edges": [{"cause", "effect", "evidence": [...]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReferenceGraphData {
    event_name: String,
    vocabulary: CanonicalVocabulary,
    edges: Vec<ReferenceEdgeData>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ReferenceEdgeData {
    cause: String,
    effect: String,
    evidence: Vec<EvidenceQuote>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EvidenceQuote {
    quote: String,
    source: String,
    locator: String,
}

impl TryFrom<ReferenceGraphData> for ReferenceGraph {
    type Error = ReferenceError;

    fn try_from(data: ReferenceGraphData) -> Result<Self, ReferenceError> {
        let vocabulary = Arc::new(data.vocabulary);
        let mut evidence = BTreeMap::new();
        let mut pairs = Vec::new();
        for e in data.edges {
            let edge = vocabulary.edge(&e.cause, &e.effect)?;
            if e.evidence.is_empty() {
                return Err(ReferenceError::Table(format!(
                    "edge {edge} has no evidence records"
                )));
            }
            pairs.push((edge.cause.clone(), edge.effect.clone()));
            let records = e
                .evidence
                .into_iter()
                .map(|q| EvidenceRecord {
                    cause: edge.cause.clone(),
                    effect: edge.effect.clone(),
                    quote: q.quote,
                    source: q.source,
                    locator: q.locator,
                })
                .collect();
            evidence.insert(edge, records);
        }
        let graph = CausalGraph::from_edge_list(vocabulary, pairs)?;
        Ok(ReferenceGraph {
            event_name: data.event_name,
            graph,
            evidence,
        })
    }
}

impl From<ReferenceGraph> for ReferenceGraphData {
    fn from(reference: ReferenceGraph) -> Self {
        let edges = reference
            .evidence
            .iter()
            .map(|(edge, records)| ReferenceEdgeData {
                cause: edge.cause.clone(),
                effect: edge.effect.clone(),
                evidence: records
                    .iter()
                    .map(|r| EvidenceQuote {
                        quote: r.quote.clone(),
                        source: r.source.clone(),
                        locator: r.locator.clone(),
                    })
                    .collect(),
            })
            .collect();
        ReferenceGraphData {
            event_name: reference.event_name,
            vocabulary: reference.graph.vocabulary().as_ref().clone(),
            edges,
        }
    }
}

/// Keeps exactly the base-chain edges that at least one record supports.
/// Nodes of the result are the endpoints of retained edges; base-chain
/// variables with no supported relation carry no causal claim and drop out.
pub fn prune_by_evidence(
    event_name: impl Into<String>,
    base: &BaseChain,
    table: &[EvidenceRecord],
) -> Result<ReferenceGraph, ReferenceError> {
    let mut evidence: BTreeMap<DirectedEdge, Vec<EvidenceRecord>> = BTreeMap::new();
    for (row, record) in table.iter().enumerate() {
        if record.quote.trim().is_empty() {
            return Err(ReferenceError::InvalidRecord {
                row,
                reason: "quote is empty".into(),
            });
        }
        let edge = base
            .vocabulary
            .edge(&record.cause, &record.effect)
            .map_err(|e| ReferenceError::InvalidRecord {
                row,
                reason: e.to_string(),
            })?;
        if !base.edges.contains(&edge) {
            return Err(ReferenceError::RecordNotInBase {
                row,
                cause: edge.cause,
                effect: edge.effect,
            });
        }
        evidence.entry(edge).or_default().push(record.clone());
    }
    let pairs: Vec<_> = evidence
        .keys()
        .map(|e| (e.cause.clone(), e.effect.clone()))
        .collect();
    let graph = CausalGraph::from_edge_list(base.vocabulary.clone(), pairs)?;
    Ok(ReferenceGraph {
        event_name: event_name.into(),
        graph,
        evidence,
    })
}
