//! Memory mining: repeated elicitation around the target, mention-frequency
//! scoring and target-conditioned expansion up to `K` hops.

pub mod extract;
pub mod http;
pub mod prompts;
pub mod responder;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_entities, Extraction, ExtractionMode};
pub use prompts::{render_prompt, PromptKind};
pub use responder::{
    FnResponder, RecordingResponder, ReplayResponder, Responder, ResponderError, TranscriptEntry,
};

use crate::memgraph::{
    edge_weights, normalize_mention, EntityId, GraphError, MemoryEdge, MemoryGraph, MemoryNode,
};

#[derive(Debug, Error)]
pub enum ElicitError {
    #[error("neighbor prompt requires a neighbor")]
    MissingNeighbor,
    #[error("hop-0 prompt takes no neighbor")]
    UnexpectedNeighbor,
    #[error("target is empty")]
    EmptyTarget,
    #[error("invalid mining config: {0}")]
    InvalidConfig(String),
    #[error("responder failed while expanding `{anchor}`: {source}")]
    Responder {
        anchor: String,
        #[source]
        source: ResponderError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Mining hyperparameters. Defaults follow the rich-knowledge profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    /// Elicitations per anchor.
    pub n: u32,
    /// Retention threshold on memorization strength.
    pub tau: f64,
    /// Maximum hop depth.
    pub k: u32,
    /// Skip anchors whose best path product back to the target is below this.
    pub adaptive_stop_threshold: Option<f64>,
    /// Cap on anchor expansions.
    pub max_iterations: u64,
    pub seed: u64,
    pub extraction: ExtractionMode,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self::rich()
    }
}

impl MiningConfig {
    /// Knowledge-rich targets: N = 10, tau = 0.2, K = 2.
    pub fn rich() -> Self {
        Self {
            n: 10,
            tau: 0.2,
            k: 2,
            adaptive_stop_threshold: None,
            max_iterations: 1000,
            seed: 0,
            extraction: ExtractionMode::Responder,
        }
    }

    /// Knowledge-sparse targets: N = 10, tau = 0.3, K = 3.
    pub fn sparse() -> Self {
        Self {
            tau: 0.3,
            k: 3,
            ..Self::rich()
        }
    }

    pub fn validate(&self) -> Result<(), ElicitError> {
        let bad = |m: &str| Err(ElicitError::InvalidConfig(m.to_string()));
        if self.n < 1 {
            return bad("n must be >= 1");
        }
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations must be >= 1");
        }
        if let Some(t) = self.adaptive_stop_threshold {
            if !(0.0..=1.0).contains(&t) {
                return bad("adaptive_stop_threshold must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Smallest number of mentioning responses that reaches `tau`.
    pub fn min_mentions(&self) -> u32 {
        (0..=self.n)
            .find(|k| *k as f64 / self.n as f64 >= self.tau)
            .unwrap_or(self.n + 1)
    }
}

/// One anchor's elicitation: N responses and what was extracted from each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationRecord {
    pub anchor: EntityId,
    pub secondary_anchor: Option<EntityId>,
    pub prompt_kind: PromptKind,
    pub prompt: String,
    pub responses: Vec<String>,
    pub extractions: Vec<BTreeSet<EntityId>>,
    pub extraction_counts: BTreeMap<EntityId, u64>,
    pub surface_forms: BTreeMap<EntityId, BTreeSet<String>>,
}

impl ElicitationRecord {
    /// The entity whose neighborhood this record describes.
    pub fn expanded(&self) -> &EntityId {
        self.secondary_anchor.as_ref().unwrap_or(&self.anchor)
    }
}

/// Fraction of responses whose extraction set contains `candidate`.
pub fn strength(record: &ElicitationRecord, candidate: &EntityId) -> f64 {
    if record.responses.is_empty() {
        return 0.0;
    }
    let hits = record
        .extractions
        .iter()
        .filter(|set| set.contains(candidate))
        .count();
    hits as f64 / record.responses.len() as f64
}

/// Product of edge weights along the strongest path from the target to each
/// node (Dijkstra on `-ln w`).
pub fn best_path_products(graph: &MemoryGraph) -> BTreeMap<EntityId, f64> {
    #[derive(PartialEq)]
    struct Item(f64, EntityId);
    impl Eq for Item {}
    impl PartialOrd for Item {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Item {
        fn cmp(&self, other: &Self) -> Ordering {
            self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
        }
    }

    let mut best = BTreeMap::new();
    let mut heap = BinaryHeap::from([Item(1.0, graph.target.clone())]);
    while let Some(Item(p, u)) = heap.pop() {
        if best.contains_key(&u) {
            continue;
        }
        best.insert(u.clone(), p);
        for e in graph.out_edges(&u) {
            if !best.contains_key(&e.dst) {
                heap.push(Item(p * e.weight, e.dst.clone()));
            }
        }
    }
    best
}

/// Output of [`expand_graph`]: the graph plus every elicitation that built it.
#[derive(Debug, Clone)]
pub struct MiningOutcome {
    pub graph: MemoryGraph,
    pub records: Vec<ElicitationRecord>,
}

fn elicit_anchor(
    config: &MiningConfig,
    graph: &MemoryGraph,
    raw_target: &str,
    anchor: &EntityId,
    responder: &dyn Responder,
) -> Result<(ElicitationRecord, u64), ElicitError> {
    let is_target = *anchor == graph.target;
    let (kind, neighbor) = if is_target {
        (PromptKind::Hop0, None)
    } else {
        (PromptKind::NeighborHop, Some(graph.display_name(anchor)))
    };
    let prompt = render_prompt(
        kind,
        raw_target,
        neighbor,
        graph.target_description.as_deref(),
    )?;
    let wrap = |source| ElicitError::Responder {
        anchor: anchor.to_string(),
        source,
    };
    let responses = (0..config.n)
        .into_par_iter()
        .map(|i| responder.complete(&prompt, i))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wrap)?;

    let mut exclude = vec![graph.target.clone()];
    if !is_target {
        exclude.push(anchor.clone());
    }
    let extractions: Vec<Extraction> = responses
        .par_iter()
        .enumerate()
        .map(|(i, r)| extract_entities(r, responder, config.extraction, i as u32, &exclude))
        .collect();

    let mut extraction_counts = BTreeMap::new();
    let mut surface_forms: BTreeMap<EntityId, BTreeSet<String>> = BTreeMap::new();
    for x in &extractions {
        for (id, c) in &x.counts {
            *extraction_counts.entry(id.clone()).or_insert(0) += c;
        }
        for (id, forms) in &x.surface_forms {
            surface_forms.entry(id.clone()).or_default().extend(forms.iter().cloned());
        }
    }
    let queried = extractions.iter().filter(|x| x.queried).count() as u64;
    let record = ElicitationRecord {
        anchor: graph.target.clone(),
        secondary_anchor: (!is_target).then(|| anchor.clone()),
        prompt_kind: kind,
        prompt,
        responses,
        extractions: extractions.iter().map(Extraction::entities).collect(),
        extraction_counts,
        surface_forms,
    };
    Ok((record, queried))
}

/// Builds the memory graph for `target` by iterative elicitation.
///
/// Anchors of one hop are expanded in sorted order and merged in that order,
/// so the result does not depend on completion timing. At most `parallelism`
/// responder calls are in flight.
pub fn expand_graph(
    config: &MiningConfig,
    target: &str,
    description: Option<&str>,
    responder: &dyn Responder,
    parallelism: usize,
) -> Result<MiningOutcome, ElicitError> {
    config.validate()?;
    let raw_target = target.trim();
    let target_id = normalize_mention(raw_target).map_err(|_| ElicitError::EmptyTarget)?;
    let mut graph = MemoryGraph::new(
        target_id.clone(),
        description.map(str::to_string),
        config.clone(),
    );
    graph.upsert_node(MemoryNode::new(target_id.clone(), raw_target, 1.0, 0))?;

    let pool = crate::thread_pool(parallelism);
    let mut records = Vec::new();
    let mut frontier = vec![target_id];

    for hop in 0..config.k {
        if frontier.is_empty() {
            break;
        }
        frontier.sort();
        if let (Some(threshold), true) = (config.adaptive_stop_threshold, hop > 0) {
            let products = best_path_products(&graph);
            frontier.retain(|u| {
                let keep = products.get(u).copied().unwrap_or(0.0) >= threshold;
                if !keep {
                    log::debug!("adaptive stop: skipping `{u}`");
                }
                keep
            });
        }
        let remaining = config.max_iterations - graph.budget.iterations;
        if (frontier.len() as u64) > remaining {
            graph.budget.truncated = true;
            frontier.truncate(remaining as usize);
        }

        let results: Vec<_> = pool.install(|| {
            frontier
                .par_iter()
                .map(|u| elicit_anchor(config, &graph, raw_target, u, responder))
                .collect()
        });

        let mut next = Vec::new();
        for result in results {
            let (record, extraction_queries) = result?;
            graph.budget.iterations += 1;
            graph.budget.queries_issued += record.responses.len() as u64;
            graph.budget.extraction_queries += extraction_queries;

            let u = record.expanded().clone();
            if !record.extraction_counts.is_empty() {
                let weights = edge_weights(&record.extraction_counts)?;
                for (v, count) in &record.extraction_counts {
                    let s = strength(&record, v);
                    if s < config.tau {
                        continue;
                    }
                    let forms = record.surface_forms.get(v).cloned().unwrap_or_default();
                    if let Some(existing) = graph.nodes.get_mut(v) {
                        existing.surface_forms.extend(forms);
                    } else {
                        let mut node = MemoryNode::new(v.clone(), v.as_str(), s, hop + 1)
                            .with_parent(u.clone());
                        if !forms.is_empty() {
                            node.surface_forms = forms;
                        }
                        graph.upsert_node(node)?;
                        next.push(v.clone());
                    }
                    graph.add_edge(MemoryEdge {
                        src: u.clone(),
                        dst: v.clone(),
                        count: *count,
                        weight: weights[v],
                    })?;
                }
            }
            records.push(record);
        }
        if graph.budget.truncated {
            break;
        }
        frontier = next;
    }
    graph.validate()?;
    Ok(MiningOutcome { graph, records })
}
