//! Random causal graphs that calibrate the comparison metrics.
//!
//! Sampling is two-stage: each vocabulary variable enters the node set
//! independently with `node_probability`, then each ordered pair of sampled
//! nodes becomes an edge independently with `edge_probability`. Sampled
//! nodes with no incident edge stay in the node set.
//!
//! The draw order is fixed — variables in vocabulary order, then ordered
//! pairs in lexicographic index order — and the generator is ChaCha8, so a
//! seed fully determines the graph across platforms and processes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CanonicalVocabulary, CausalGraph, DirectedEdge};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
}

/// Node and edge inclusion probabilities plus the seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub node_probability: f64,
    pub edge_probability: f64,
    pub seed: u64,
}

impl BaselineConfig {
    pub fn new(node_probability: f64, edge_probability: f64, seed: u64) -> Result<Self, BaselineError> {
        let cfg = Self { node_probability, edge_probability, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BaselineError> {
        for (name, value) in [
            ("node_probability", self.node_probability),
            ("edge_probability", self.edge_probability),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(BaselineError::InvalidProbability { name, value });
            }
        }
        Ok(())
    }
}

/// Samples one random graph. Deterministic given `(vocab, cfg)`.
pub fn random_graph(vocab: &Arc<CanonicalVocabulary>, cfg: &BaselineConfig) -> CausalGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sampled: Vec<&str> = Vec::new();
    for name in vocab.variables() {
        if rng.random::<f64>() < cfg.node_probability {
            sampled.push(name);
        }
    }
    let mut edges = BTreeSet::new();
    for cause in &sampled {
        for effect in &sampled {
            if cause == effect {
                continue;
            }
            if rng.random::<f64>() < cfg.edge_probability {
                edges.insert(DirectedEdge {
                    cause: (*cause).to_string(),
                    effect: (*effect).to_string(),
                });
            }
        }
    }
    let nodes: BTreeSet<String> = sampled.iter().map(|s| s.to_string()).collect();
    CausalGraph::from_parts(vocab.clone(), nodes, edges, Some(BTreeMap::new()))
        .expect("sampled graph satisfies invariants by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(n: usize) -> Arc<CanonicalVocabulary> {
        let names: Vec<String> = (0..n).map(|i| format!("var {i:02}")).collect();
        Arc::new(CanonicalVocabulary::new("Tropical Cyclone", names).unwrap())
    }

    #[test]
    fn zero_node_probability_gives_empty_graph() {
        let cfg = BaselineConfig::new(0.0, 1.0, 3).unwrap();
        let g = random_graph(&vocab(5), &cfg);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn saturation_gives_complete_directed_graph() {
        let cfg = BaselineConfig::new(1.0, 1.0, 3).unwrap();
        let g = random_graph(&vocab(3), &cfg);
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn same_seed_same_graph() {
        let cfg = BaselineConfig::new(0.5, 0.5, 99).unwrap();
        let v = vocab(12);
        assert_eq!(random_graph(&v, &cfg), random_graph(&v, &cfg));
    }

    #[test]
    fn different_seeds_differ_somewhere() {
        let v = vocab(12);
        let a = random_graph(&v, &BaselineConfig::new(0.5, 0.5, 1).unwrap());
        let b = random_graph(&v, &BaselineConfig::new(0.5, 0.5, 2).unwrap());
        assert_ne!(a, b);
    }

    #[test]
    fn probabilities_outside_unit_interval_are_rejected() {
        assert!(BaselineConfig::new(1.2, 0.5, 0).is_err());
        assert!(BaselineConfig::new(0.5, -0.1, 0).is_err());
    }

    #[test]
    fn sampled_isolated_nodes_are_retained() {
        // Edge probability 0 keeps every sampled node isolated.
        let cfg = BaselineConfig::new(1.0, 0.0, 7).unwrap();
        let g = random_graph(&vocab(4), &cfg);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn edge_density_matches_probability() {
        // Law of large numbers over sampled-node ordered pairs.
        let v = vocab(12);
        let mut pairs = 0u64;
        let mut edges = 0u64;
        for seed in 0..10_000 {
            let g = random_graph(&v, &BaselineConfig::new(0.5, 0.5, seed).unwrap());
            let k = g.node_count() as u64;
            pairs += k * k.saturating_sub(1);
            edges += g.edge_count() as u64;
        }
        let density = edges as f64 / pairs as f64;
        assert!((density - 0.5).abs() < 0.02, "density {density}");
    }
}
