//! Strength-weighted exploratory random walks over a memory graph.
//!
//! From node `u` a walk steps to out-neighbor `v` with probability
//! proportional to `w(u, v) * (1 / (1 + vis(v)))^alpha`, where `vis` counts
//! visits accumulated over all previous walks of the run. Paths whose mean
//! edge weight falls below `eta` are discarded.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memgraph::{EntityId, MemoryGraph};

/// Hard cap on coverage-driven sampling, as a multiple of `r`.
pub const COVERAGE_CAP_FACTOR: u32 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("`{0}` has no usable outgoing edge")]
    DeadEnd(EntityId),
    #[error("target has no outgoing edges")]
    IsolatedTarget,
    #[error("target has no out-neighbors to start neighbor walks from")]
    NoNeighbors,
    #[error("no edge {src} -> {dst}")]
    NotAPath { src: EntityId, dst: EntityId },
    #[error("a path needs at least two nodes")]
    TooShort,
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
    #[error("path file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// When walk visits are credited to the ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitUpdate {
    /// After every accepted step, so later steps of the same walk see it.
    #[default]
    PerStep,
    /// Only once a walk has finished.
    BetweenWalks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Number of walks.
    pub r: u32,
    /// Maximum walk length in nodes.
    pub l: u32,
    /// Exploration coefficient.
    pub alpha: f64,
    /// Path-quality threshold (inclusive).
    pub eta: f64,
    pub coverage_target: Option<f64>,
    pub seed: u64,
    pub visit_update: VisitUpdate,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self::rich()
    }
}

impl SamplingConfig {
    /// R = 200, L = 5, alpha = 1, eta = 0.3.
    pub fn rich() -> Self {
        Self {
            r: 200,
            l: 5,
            alpha: 1.0,
            eta: 0.3,
            coverage_target: None,
            seed: 0,
            visit_update: VisitUpdate::PerStep,
        }
    }

    /// As [`rich`](Self::rich) with R = 20.
    pub fn sparse() -> Self {
        Self { r: 20, ..Self::rich() }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::InvalidConfig(m.into()));
        if self.r < 1 {
            return bad("r must be >= 1");
        }
        if self.l < 2 {
            return bad("l must be >= 2");
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return bad("alpha must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad("eta must lie in [0, 1]");
        }
        if let Some(c) = self.coverage_target {
            if !(c > 0.0 && c <= 1.0) {
                return bad("coverage_target must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Forget,
    Neighbor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryPath {
    pub kind: PathKind,
    pub nodes: Vec<EntityId>,
    pub quality: f64,
}

impl MemoryPath {
    pub fn pairs(&self) -> impl Iterator<Item = (&EntityId, &EntityId)> {
        self.nodes.windows(2).map(|w| (&w[0], &w[1]))
    }
}

/// Cumulative visit counts for one sampling run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitLedger {
    pub visits: BTreeMap<EntityId, u64>,
}

impl VisitLedger {
    pub fn get(&self, id: &EntityId) -> u64 {
        self.visits.get(id).copied().unwrap_or(0)
    }

    pub fn visit(&mut self, id: &EntityId) {
        *self.visits.entry(id.clone()).or_insert(0) += 1;
    }
}

/// Normalized next-step distribution out of `u`.
pub fn transition_distribution(
    graph: &MemoryGraph,
    u: &EntityId,
    ledger: &VisitLedger,
    alpha: f64,
) -> Result<BTreeMap<EntityId, f64>, SamplerError> {
    distribution_excluding(graph, u, ledger, alpha, None)
}

fn distribution_excluding(
    graph: &MemoryGraph,
    u: &EntityId,
    ledger: &VisitLedger,
    alpha: f64,
    exclude: Option<&EntityId>,
) -> Result<BTreeMap<EntityId, f64>, SamplerError> {
    let scores: BTreeMap<EntityId, f64> = graph
        .out_edges(u)
        .filter(|e| Some(&e.dst) != exclude)
        .map(|e| {
            let penalty = (1.0 / (1.0 + ledger.get(&e.dst) as f64)).powf(alpha);
            (e.dst.clone(), e.weight * penalty)
        })
        .collect();
    let total: f64 = scores.values().sum();
    if scores.is_empty() || total <= 0.0 {
        return Err(SamplerError::DeadEnd(u.clone()));
    }
    Ok(scores.into_iter().map(|(v, s)| (v, s / total)).collect())
}

/// Mean edge weight along `nodes`.
pub fn path_quality(graph: &MemoryGraph, nodes: &[EntityId]) -> Result<f64, SamplerError> {
    if nodes.len() < 2 {
        return Err(SamplerError::TooShort);
    }
    let mut sum = 0.0;
    for w in nodes.windows(2) {
        let e = graph.edge(&w[0], &w[1]).ok_or_else(|| SamplerError::NotAPath {
            src: w[0].clone(),
            dst: w[1].clone(),
        })?;
        sum += e.weight;
    }
    Ok(sum / (nodes.len() - 1) as f64)
}

/// One walk step as seen by the sampler, for auditing.
#[derive(Debug, Clone)]
pub struct StepAudit {
    pub from: EntityId,
    /// Ledger state the distribution was computed from.
    pub ledger: VisitLedger,
    pub distribution: BTreeMap<EntityId, f64>,
    pub chosen: EntityId,
}

fn draw(rng: &mut ChaCha8Rng, dist: &BTreeMap<EntityId, f64>) -> EntityId {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (v, p) in dist {
        acc += p;
        if u < acc {
            return v.clone();
        }
    }
    dist.keys().next_back().expect("non-empty distribution").clone()
}

struct Walker<'a> {
    graph: &'a MemoryGraph,
    config: &'a SamplingConfig,
    rng: ChaCha8Rng,
    ledger: VisitLedger,
    exclude: Option<EntityId>,
}

impl Walker<'_> {
    fn walk(&mut self, start: &EntityId, audit: &mut dyn FnMut(&StepAudit)) -> Vec<EntityId> {
        let mut nodes = vec![start.clone()];
        while nodes.len() < self.config.l as usize {
            let u = nodes.last().expect("non-empty");
            let Ok(dist) = distribution_excluding(
                self.graph,
                u,
                &self.ledger,
                self.config.alpha,
                self.exclude.as_ref(),
            ) else {
                break;
            };
            let v = draw(&mut self.rng, &dist);
            audit(&StepAudit {
                from: u.clone(),
                ledger: self.ledger.clone(),
                distribution: dist,
                chosen: v.clone(),
            });
            if self.config.visit_update == VisitUpdate::PerStep {
                self.ledger.visit(&v);
            }
            nodes.push(v);
        }
        if self.config.visit_update == VisitUpdate::BetweenWalks {
            for v in &nodes[1..] {
                self.ledger.visit(v);
            }
        }
        nodes
    }

    fn finish(&self, nodes: Vec<EntityId>, kind: PathKind) -> Option<MemoryPath> {
        let quality = path_quality(self.graph, &nodes).ok()?;
        (quality >= self.config.eta).then_some(MemoryPath { kind, nodes, quality })
    }
}

/// Result of a forget-path sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOutcome {
    /// Retained paths, in walk order.
    pub paths: Vec<MemoryPath>,
    pub walks: u32,
    pub coverage: f64,
    /// Coverage after each batch of `r` walks.
    pub coverage_history: Vec<f64>,
    /// Coverage target was set and still unmet at the walk cap.
    pub hit_cap: bool,
}

/// Forget-path sampling from the target.
pub fn sample_paths(graph: &MemoryGraph, config: &SamplingConfig) -> Result<SamplingOutcome, SamplerError> {
    sample_paths_audited(graph, config, &mut |_| {})
}

/// [`sample_paths`] with a callback invoked on every step.
pub fn sample_paths_audited(
    graph: &MemoryGraph,
    config: &SamplingConfig,
    audit: &mut dyn FnMut(&StepAudit),
) -> Result<SamplingOutcome, SamplerError> {
    config.validate()?;
    if graph.out_edges(&graph.target).next().is_none() {
        return Err(SamplerError::IsolatedTarget);
    }
    let mut walker = Walker {
        graph,
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        ledger: VisitLedger::default(),
        exclude: None,
    };
    let cap = config.r.saturating_mul(COVERAGE_CAP_FACTOR);
    let mut paths = Vec::new();
    let mut history = Vec::new();
    let mut walks = 0;
    loop {
        for _ in 0..config.r {
            let nodes = walker.walk(&graph.target, audit);
            walks += 1;
            paths.extend(walker.finish(nodes, PathKind::Forget));
        }
        let cov = coverage(graph, &paths);
        history.push(cov);
        match config.coverage_target {
            Some(t) if cov < t && walks < cap => continue,
            _ => break,
        }
    }
    let coverage = *history.last().expect("at least one batch");
    Ok(SamplingOutcome {
        paths,
        walks,
        coverage,
        hit_cap: config.coverage_target.is_some_and(|t| coverage < t),
        coverage_history: history,
    })
}

/// Neighbor-path sampling: walks start at the target's out-neighbors, taken
/// round-robin in order of decreasing strength, and never enter the target.
pub fn sample_neighbor_paths(
    graph: &MemoryGraph,
    config: &SamplingConfig,
) -> Result<Vec<MemoryPath>, SamplerError> {
    config.validate()?;
    let starts = ranked_neighbors(graph);
    if starts.is_empty() {
        return Err(SamplerError::NoNeighbors);
    }
    let mut walker = Walker {
        graph,
        config,
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x6e65_6967_6862_6f72),
        ledger: VisitLedger::default(),
        exclude: Some(graph.target.clone()),
    };
    let mut out = Vec::new();
    for j in 0..config.r as usize {
        let start = starts[j % starts.len()];
        let nodes = walker.walk(start, &mut |_| {});
        out.extend(walker.finish(nodes, PathKind::Neighbor));
    }
    Ok(out)
}

/// Target out-neighbors by decreasing strength, ties by id.
fn ranked_neighbors(graph: &MemoryGraph) -> Vec<&EntityId> {
    let mut starts: Vec<&EntityId> = graph.out_edges(&graph.target).map(|e| &e.dst).collect();
    let strength = |id: &EntityId| graph.node(id).map_or(0.0, |n| n.strength);
    starts.sort_by(|a, b| strength(b).total_cmp(&strength(a)).then_with(|| a.cmp(b)));
    starts
}

/// Start nodes neighbor sampling would use for `r` walks.
pub fn neighbor_start_order(graph: &MemoryGraph, r: usize) -> Vec<EntityId> {
    let starts = ranked_neighbors(graph);
    if starts.is_empty() {
        return Vec::new();
    }
    (0..r).map(|j| starts[j % starts.len()].clone()).collect()
}

/// Fraction of non-target nodes on at least one forget path.
pub fn coverage(graph: &MemoryGraph, paths: &[MemoryPath]) -> f64 {
    let others: BTreeSet<&EntityId> = graph.nodes.keys().filter(|id| **id != graph.target).collect();
    if others.is_empty() {
        return 1.0;
    }
    let covered: BTreeSet<&EntityId> = paths
        .iter()
        .filter(|p| p.kind == PathKind::Forget)
        .flat_map(|p| p.nodes.iter())
        .filter(|id| others.contains(id))
        .collect();
    covered.len() as f64 / others.len() as f64
}

/// Writes one JSON path per line.
pub fn write_paths_jsonl<W: Write>(mut out: W, paths: &[MemoryPath]) -> std::io::Result<u64> {
    let mut buf = Vec::new();
    for p in paths {
        serde_json::to_writer(&mut buf, p)?;
        buf.push(b'\n');
    }
    out.write_all(&buf)?;
    Ok(buf.len() as u64)
}

pub fn read_paths_jsonl<R: BufRead>(input: R) -> Result<Vec<MemoryPath>, SamplerError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let err = |message: String| SamplerError::Parse { line: i + 1, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicit::MiningConfig;
    use crate::memgraph::{normalize_mention, MemoryEdge, MemoryNode};
    use proptest::prelude::*;

    fn id(s: &str) -> EntityId {
        normalize_mention(s).unwrap()
    }

    /// Builds a graph from `(src, dst, weight)` triples; hops follow BFS order.
    fn graph(edges: &[(&str, &str, f64)]) -> MemoryGraph {
        let mut g = MemoryGraph::new(id("t"), None, MiningConfig { k: 10, ..MiningConfig::default() });
        g.upsert_node(MemoryNode::new(id("t"), "t", 1.0, 0)).unwrap();
        let mut pending: Vec<_> = edges.to_vec();
        while !pending.is_empty() {
            let before = pending.len();
            pending.retain(|(s, d, w)| {
                let Some(hop) = g.node(&id(s)).map(|n| n.hop) else { return true };
                if g.node(&id(d)).is_none() {
                    g.upsert_node(MemoryNode::new(id(d), *d, 0.5, hop + 1).with_parent(id(s))).unwrap();
                }
                g.add_edge(MemoryEdge { src: id(s), dst: id(d), count: 1, weight: *w }).unwrap();
                false
            });
            assert!(pending.len() < before, "unreachable edges in fixture");
        }
        g
    }

    fn cfg(r: u32, alpha: f64, eta: f64) -> SamplingConfig {
        SamplingConfig { r, l: 5, alpha, eta, coverage_target: None, seed: 11, visit_update: VisitUpdate::PerStep }
    }

    #[test]
    fn distribution_examples() {
        let g = graph(&[("t", "a", 0.75), ("t", "b", 0.25)]);
        let mut ledger = VisitLedger::default();
        ledger.visits.insert(id("a"), 5);
        let d = transition_distribution(&g, &id("t"), &ledger, 0.0).unwrap();
        assert_eq!((d[&id("a")], d[&id("b")]), (0.75, 0.25));

        let g = graph(&[("t", "a", 0.5), ("t", "b", 0.5)]);
        let mut ledger = VisitLedger::default();
        ledger.visits.insert(id("b"), 1);
        let d = transition_distribution(&g, &id("t"), &ledger, 1.0).unwrap();
        assert!((d[&id("a")] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d[&id("b")] - 1.0 / 3.0).abs() < 1e-15);

        assert_eq!(
            transition_distribution(&g, &id("a"), &ledger, 1.0),
            Err(SamplerError::DeadEnd(id("a")))
        );
    }

    #[test]
    fn quality_examples() {
        let g = graph(&[("t", "a", 0.25)]);
        assert_eq!(path_quality(&g, &[id("t"), id("a")]).unwrap(), 0.25);
        let g = graph(&[("t", "a", 0.6), ("a", "b", 0.2), ("b", "c", 0.1)]);
        let q = path_quality(&g, &[id("t"), id("a"), id("b"), id("c")]).unwrap();
        assert!((q - 0.3).abs() < 1e-15);
        assert_eq!(path_quality(&g, &[id("t")]), Err(SamplerError::TooShort));
        assert!(matches!(path_quality(&g, &[id("t"), id("c")]), Err(SamplerError::NotAPath { .. })));
    }

    #[test]
    fn chain_yields_identical_paths() {
        let g = graph(&[("t", "a", 1.0)]);
        let out = sample_paths(&g, &cfg(3, 1.0, 0.3)).unwrap();
        assert_eq!(out.paths.len(), 3);
        for p in &out.paths {
            assert_eq!(p.nodes, vec![id("t"), id("a")]);
            assert_eq!(p.quality, 1.0);
        }
    }

    #[test]
    fn boundary_quality_is_retained() {
        let g = graph(&[("t", "a", 0.4), ("a", "b", 0.2)]);
        let c = SamplingConfig { l: 3, ..cfg(1, 0.0, 0.3) };
        let out = sample_paths(&g, &c).unwrap();
        assert_eq!(out.paths.len(), 1);
        assert_eq!(out.paths[0].nodes.len(), 3);
        assert!(out.paths[0].quality >= 0.3);
    }

    #[test]
    fn low_quality_and_isolated_cases() {
        let g = graph(&[("t", "a", 0.25)]);
        assert!(sample_paths(&g, &cfg(5, 1.0, 0.3)).unwrap().paths.is_empty());
        let mut g = MemoryGraph::new(id("t"), None, MiningConfig::default());
        g.upsert_node(MemoryNode::new(id("t"), "t", 1.0, 0)).unwrap();
        assert_eq!(sample_paths(&g, &cfg(1, 1.0, 0.3)).unwrap_err(), SamplerError::IsolatedTarget);
        assert_eq!(sample_neighbor_paths(&g, &cfg(1, 1.0, 0.3)).unwrap_err(), SamplerError::NoNeighbors);
    }

    #[test]
    fn neighbor_walks_avoid_target() {
        // a's edges: -> b and -> t; exclusion forces [a, b].
        let g = graph(&[("t", "a", 1.0), ("a", "b", 0.5), ("a", "t", 0.5)]);
        let paths = sample_neighbor_paths(&g, &cfg(4, 1.0, 0.0)).unwrap();
        assert_eq!(paths.len(), 4);
        for p in &paths {
            assert_eq!(p.nodes, vec![id("a"), id("b")]);
            assert_eq!(p.kind, PathKind::Neighbor);
        }
        let g = graph(&[("t", "a", 1.0), ("a", "t", 1.0)]);
        assert!(sample_neighbor_paths(&g, &cfg(4, 1.0, 0.0)).unwrap().is_empty());
    }

    #[test]
    fn neighbor_starts_round_robin() {
        let g = graph(&[("t", "a", 0.3), ("t", "b", 0.3), ("t", "c", 0.3)]);
        let order: Vec<String> = neighbor_start_order(&g, 6).iter().map(|e| e.to_string()).collect();
        assert_eq!(order, ["a", "b", "c", "a", "b", "c"]);
    }

    #[test]
    fn coverage_examples() {
        let g = graph(&[("t", "a", 1.0)]);
        let p = MemoryPath { kind: PathKind::Forget, nodes: vec![id("t"), id("a")], quality: 1.0 };
        assert_eq!(coverage(&g, &[p]), 1.0);
        assert_eq!(coverage(&g, &[]), 0.0);
        let mut lone = MemoryGraph::new(id("t"), None, MiningConfig::default());
        lone.upsert_node(MemoryNode::new(id("t"), "t", 1.0, 0)).unwrap();
        assert_eq!(coverage(&lone, &[]), 1.0);

        let edges: Vec<(String, String)> = (0..10).map(|i| ("t".to_string(), format!("n{i}"))).collect();
        let refs: Vec<(&str, &str, f64)> = edges.iter().map(|(s, d)| (s.as_str(), d.as_str(), 0.1)).collect();
        let g = graph(&refs);
        let paths: Vec<MemoryPath> = (0..9)
            .map(|i| MemoryPath { kind: PathKind::Forget, nodes: vec![id("t"), id(&format!("n{i}"))], quality: 0.1 })
            .collect();
        assert!((coverage(&g, &paths) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn between_walk_updates_freeze_within_a_walk() {
        let g = graph(&[("t", "a", 0.5), ("t", "b", 0.5), ("a", "t", 0.5), ("a", "b", 0.5), ("b", "a", 1.0)]);
        let c = SamplingConfig { visit_update: VisitUpdate::BetweenWalks, ..cfg(1, 1.0, 0.0) };
        let mut ledgers = Vec::new();
        sample_paths_audited(&g, &c, &mut |s| ledgers.push(s.ledger.clone())).unwrap();
        assert!(ledgers.iter().all(|l| l.visits.is_empty()));
    }

    #[test]
    fn path_file_round_trip() {
        let g = graph(&[("t", "a", 0.6), ("a", "b", 0.4)]);
        let out = sample_paths(&g, &cfg(5, 1.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        write_paths_jsonl(&mut buf, &out.paths).unwrap();
        assert_eq!(read_paths_jsonl(&buf[..]).unwrap(), out.paths);
        assert!(matches!(read_paths_jsonl(&b"{}\n"[..]), Err(SamplerError::Parse { line: 1, .. })));
    }

    #[test]
    fn config_validation() {
        assert!(SamplingConfig { l: 1, ..SamplingConfig::default() }.validate().is_err());
        assert!(SamplingConfig { eta: 1.5, ..SamplingConfig::default() }.validate().is_err());
        assert!(SamplingConfig { coverage_target: Some(0.0), ..SamplingConfig::default() }.validate().is_err());
    }

    fn arb_weights() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(1u32..100, 1..6).prop_map(|c| {
            let total: u32 = c.iter().sum();
            c.iter().map(|x| *x as f64 / total as f64).collect()
        })
    }

    proptest! {
        #[test]
        fn distribution_sums_to_one(weights in arb_weights(), visits in proptest::collection::vec(0u64..20, 6), alpha in 0.0f64..3.0) {
            let names: Vec<String> = (0..weights.len()).map(|i| format!("n{i}")).collect();
            let edges: Vec<(&str, &str, f64)> = names.iter().zip(&weights).map(|(n, w)| ("t", n.as_str(), *w)).collect();
            let g = graph(&edges);
            let mut ledger = VisitLedger::default();
            for (n, v) in names.iter().zip(&visits) {
                ledger.visits.insert(id(n), *v);
            }
            let d = transition_distribution(&g, &id("t"), &ledger, alpha).unwrap();
            let sum: f64 = d.values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert_eq!(d.len(), weights.len());
            if alpha == 0.0 {
                for (n, w) in names.iter().zip(&weights) {
                    prop_assert!((d[&id(n)] - w / weights.iter().sum::<f64>()).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn more_visits_lower_probability(weights in arb_weights(), who in 0usize..6, alpha in 0.1f64..3.0) {
            prop_assume!(weights.len() >= 2);
            let who = who % weights.len();
            let names: Vec<String> = (0..weights.len()).map(|i| format!("n{i}")).collect();
            let edges: Vec<(&str, &str, f64)> = names.iter().zip(&weights).map(|(n, w)| ("t", n.as_str(), *w)).collect();
            let g = graph(&edges);
            let mut ledger = VisitLedger::default();
            let before = transition_distribution(&g, &id("t"), &ledger, alpha).unwrap()[&id(&names[who])];
            ledger.visit(&id(&names[who]));
            let after = transition_distribution(&g, &id("t"), &ledger, alpha).unwrap()[&id(&names[who])];
            prop_assert!(after < before);
        }

        #[test]
        fn runs_are_prefix_stable(r1 in 1u32..30, extra in 1u32..30, seed in any::<u64>()) {
            let g = graph(&[("t", "a", 0.5), ("t", "b", 0.5), ("a", "c", 1.0), ("b", "c", 0.4), ("b", "a", 0.6)]);
            let base = SamplingConfig { seed, ..cfg(r1, 1.0, 0.0) };
            let short = sample_paths(&g, &base).unwrap();
            let long = sample_paths(&g, &SamplingConfig { r: r1 + extra, ..base.clone() }).unwrap();
            prop_assert_eq!(&long.paths[..short.paths.len()], &short.paths[..]);
            prop_assert!(long.coverage >= short.coverage);
        }
    }
}
