//! Graph comparison and answer-scoring metrics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elicit::MiningConfig;
use crate::memgraph::{EntityId, MemoryGraph};
use crate::oracle::{expected_graph, OracleWorld};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("weight for `{0}` is negative or not finite")]
    BadWeight(EntityId),
}

fn top_k(ranked: &[(EntityId, f64)], k: usize) -> BTreeSet<&EntityId> {
    let mut sorted: Vec<&(EntityId, f64)> = ranked.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    sorted.into_iter().take(k).map(|(id, _)| id).collect()
}

/// Jaccard overlap of the `k` highest-scored entities of each list. Score
/// ties are broken by id.
pub fn jaccard_topk(a: &[(EntityId, f64)], b: &[(EntityId, f64)], k: usize) -> Result<f64, MetricsError> {
    if k == 0 {
        return Err(MetricsError::ZeroK);
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let (ta, tb) = (top_k(a, k), top_k(b, k));
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    Ok(inter as f64 / union as f64)
}

/// Non-negative entity weights normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDistribution {
    weights: BTreeMap<EntityId, f64>,
}

impl FrequencyDistribution {
    pub fn new(raw: BTreeMap<EntityId, f64>) -> Result<Self, MetricsError> {
        if let Some((id, _)) = raw.iter().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
            return Err(MetricsError::BadWeight(id.clone()));
        }
        let total: f64 = raw.values().sum();
        if raw.is_empty() || total <= 0.0 {
            return Err(MetricsError::EmptyInput);
        }
        let weights = raw.into_iter().filter(|(_, w)| *w > 0.0).map(|(k, w)| (k, w / total)).collect();
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &BTreeMap<EntityId, f64> {
        &self.weights
    }

    pub fn get(&self, id: &EntityId) -> f64 {
        self.weights.get(id).copied().unwrap_or(0.0)
    }
}

/// Cosine similarity after aligning both distributions to their union.
pub fn frequency_cosine(a: &FrequencyDistribution, b: &FrequencyDistribution) -> f64 {
    let support: BTreeSet<&EntityId> = a.weights.keys().chain(b.weights.keys()).collect();
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for id in support {
        let (x, y) = (a.get(id), b.get(id));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

fn tokens(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_lowercase).collect()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L recall over lowercased whitespace tokens.
pub fn rouge_l_recall(candidate: &str, reference: &str) -> Result<f64, MetricsError> {
    let r = tokens(reference);
    if r.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    Ok(lcs_len(&tokens(candidate), &r) as f64 / r.len() as f64)
}

/// Non-target nodes with their strengths.
pub fn graph_ranking(graph: &MemoryGraph) -> Vec<(EntityId, f64)> {
    graph
        .nodes
        .values()
        .filter(|n| n.id != graph.target)
        .map(|n| (n.id.clone(), n.strength))
        .collect()
}

pub fn graph_distribution(graph: &MemoryGraph) -> Result<FrequencyDistribution, MetricsError> {
    FrequencyDistribution::new(graph_ranking(graph).into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphComparison {
    pub jaccard_top50: f64,
    pub freq_cosine: f64,
}

/// Top-50 Jaccard and frequency cosine between two mined graphs.
pub fn compare_graphs(a: &MemoryGraph, b: &MemoryGraph) -> Result<GraphComparison, MetricsError> {
    Ok(GraphComparison {
        jaccard_top50: jaccard_topk(&graph_ranking(a), &graph_ranking(b), 50)?,
        freq_cosine: frequency_cosine(&graph_distribution(a)?, &graph_distribution(b)?),
    })
}

/// Precision and recall of `mined`'s non-target nodes against the graph the
/// world predicts. Empty sets score 1.0.
pub fn recovery_fidelity(mined: &MemoryGraph, truth: &OracleWorld, config: &MiningConfig) -> (f64, f64) {
    let expected = expected_graph(truth, config, mined.display_name(&mined.target));
    let set = |g: &MemoryGraph| -> BTreeSet<EntityId> {
        g.nodes.keys().filter(|id| **id != g.target).cloned().collect()
    };
    fidelity(&set(mined), &set(&expected))
}

pub(crate) fn fidelity(mined: &BTreeSet<EntityId>, truth: &BTreeSet<EntityId>) -> (f64, f64) {
    let hit = mined.intersection(truth).count() as f64;
    let ratio = |n: usize| if n == 0 { 1.0 } else { hit / n as f64 };
    (ratio(mined.len()), ratio(truth.len()))
}
