//! Target-rooted weighted memory graph.
//!
//! Nodes are entities co-elicited around the target and carry a memorization
//! strength in `[0, 1]`. Edges point in discovery direction (`u -> v` when `v`
//! was extracted from responses anchored at `u`) and carry the normalized
//! extraction count of `v` among everything extracted at `u`.
//!
//! A graph is assembled by a single writer (the miner) and is read-only
//! afterwards.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::elicit::MiningConfig;

/// Tolerance on the per-node outgoing weight sum. Weights are `count / total`
/// quotients, so the sum drifts by at most a few ulps.
const WEIGHT_SUM_SLACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("mention normalizes to an empty string")]
    EmptyMention,
    #[error("node `{id}` at hop {hop} has no parent at hop {}", hop - 1)]
    OrphanNode { id: EntityId, hop: u32 },
    #[error("hop-0 node `{id}` is not the graph target `{target}`")]
    NotTarget { id: EntityId, target: EntityId },
    #[error("strength {0} is outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("neighborhood is empty")]
    EmptyNeighborhood,
    #[error("extraction count for `{0}` must be at least 1")]
    ZeroCount(EntityId),
    #[error("edge {src} -> {dst}: {reason}")]
    InvalidEdge {
        src: EntityId,
        dst: EntityId,
        reason: String,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

/// Normalized entity key: case-folded, whitespace-collapsed, with leading and
/// trailing punctuation trimmed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(String);

fn is_trim_char(c: char) -> bool {
    c.is_whitespace()
        || c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' | '\u{2013}' | '\u{2014}'
                | '\u{2026}' | '\u{00ab}' | '\u{00bb}'
        )
}

fn normalize_once(raw: &str) -> String {
    let folded = raw.to_lowercase();
    let trimmed = folded.trim_matches(is_trim_char);
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalizes a raw mention into an [`EntityId`].
pub fn normalize_mention(raw: &str) -> Result<EntityId, GraphError> {
    // Lowercasing a handful of code points can expose new trim characters;
    // iterate to a fixpoint so normalization is idempotent.
    let mut current = normalize_once(raw);
    loop {
        let next = normalize_once(&current);
        if next == current {
            break;
        }
        current = next;
    }
    if current.is_empty() {
        Err(GraphError::EmptyMention)
    } else {
        Ok(EntityId(current))
    }
}

impl EntityId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for EntityId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_mention(s)
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        let id = normalize_mention(&raw).map_err(serde::de::Error::custom)?;
        if id.0 != raw {
            return Err(serde::de::Error::custom(format!(
                "entity id `{raw}` is not normalized (expected `{id}`)"
            )));
        }
        Ok(id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryNode {
    pub id: EntityId,
    pub surface_forms: BTreeSet<String>,
    pub strength: f64,
    pub hop: u32,
    pub discovered_from: Option<EntityId>,
}

impl MemoryNode {
    pub fn new(id: EntityId, surface: impl Into<String>, strength: f64, hop: u32) -> Self {
        Self {
            id,
            surface_forms: BTreeSet::from([surface.into()]),
            strength,
            hop,
            discovered_from: None,
        }
    }

    pub fn with_parent(mut self, parent: EntityId) -> Self {
        self.discovered_from = Some(parent);
        self
    }

    /// Preferred rendering for prompts: the first stored surface form, or the
    /// key itself when none was recorded.
    pub fn display_name(&self) -> &str {
        self.surface_forms
            .iter()
            .next()
            .map_or(self.id.as_str(), String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEdge {
    pub src: EntityId,
    pub dst: EntityId,
    pub count: u64,
    pub weight: f64,
}

/// Elicitation cost accounting for one mining run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    /// Anchor expansions performed.
    pub iterations: u64,
    /// Elicitation queries sent to the responder.
    pub queries_issued: u64,
    pub queries_per_iteration: u64,
    /// Responder-assisted extraction calls; tracked apart from elicitation.
    #[serde(default)]
    pub extraction_queries: u64,
    /// Set when `max_iterations` stopped expansion with anchors still pending.
    #[serde(default)]
    pub truncated: bool,
}

impl BudgetReport {
    pub fn within_bound(&self) -> bool {
        self.queries_issued <= self.queries_per_iteration * self.iterations
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryGraph {
    pub target: EntityId,
    pub target_description: Option<String>,
    pub nodes: BTreeMap<EntityId, MemoryNode>,
    pub edges: BTreeMap<(EntityId, EntityId), MemoryEdge>,
    pub config: MiningConfig,
    pub budget: BudgetReport,
}

/// Normalizes one anchor's extraction counts into edge weights.
pub fn edge_weights(
    counts: &BTreeMap<EntityId, u64>,
) -> Result<BTreeMap<EntityId, f64>, GraphError> {
    if counts.is_empty() {
        return Err(GraphError::EmptyNeighborhood);
    }
    if let Some((id, _)) = counts.iter().find(|(_, c)| **c == 0) {
        return Err(GraphError::ZeroCount(id.clone()));
    }
    let total: u64 = counts.values().sum();
    Ok(counts
        .iter()
        .map(|(id, c)| (id.clone(), *c as f64 / total as f64))
        .collect())
}

impl MemoryGraph {
    /// An empty graph for `target`; insert the hop-0 node with [`upsert_node`].
    ///
    /// [`upsert_node`]: MemoryGraph::upsert_node
    pub fn new(target: EntityId, description: Option<String>, config: MiningConfig) -> Self {
        Self {
            budget: BudgetReport {
                queries_per_iteration: config.n as u64,
                ..BudgetReport::default()
            },
            target,
            target_description: description,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            config,
        }
    }

    pub fn node(&self, id: &EntityId) -> Option<&MemoryNode> {
        self.nodes.get(id)
    }

    pub fn target_node(&self) -> Option<&MemoryNode> {
        self.nodes.get(&self.target)
    }

    pub fn edge(&self, src: &EntityId, dst: &EntityId) -> Option<&MemoryEdge> {
        self.edges.get(&(src.clone(), dst.clone()))
    }

    /// Outgoing edges of `src`, in `dst` order.
    pub fn out_edges<'a>(&'a self, src: &'a EntityId) -> impl Iterator<Item = &'a MemoryEdge> + 'a {
        self.edges
            .range((src.clone(), EntityId(String::new()))..)
            .take_while(move |((s, _), _)| s == src)
            .map(|(_, e)| e)
    }

    pub fn display_name<'a>(&'a self, id: &'a EntityId) -> &'a str {
        self.nodes.get(id).map_or(id.as_str(), MemoryNode::display_name)
    }

    /// Surface forms of `id` plus its key; used for literal-presence checks.
    pub fn surface_forms(&self, id: &EntityId) -> Vec<String> {
        let mut forms: Vec<String> = self
            .nodes
            .get(id)
            .map(|n| n.surface_forms.iter().cloned().collect())
            .unwrap_or_default();
        forms.push(id.as_str().to_string());
        forms.sort();
        forms.dedup();
        forms
    }

    /// Inserts `node`, or merges its surface forms into the existing node and
    /// replaces the stored strength.
    pub fn upsert_node(&mut self, node: MemoryNode) -> Result<(), GraphError> {
        if !(0.0..=1.0).contains(&node.strength) {
            return Err(GraphError::StrengthOutOfRange(node.strength));
        }
        if let Some(existing) = self.nodes.get_mut(&node.id) {
            existing.surface_forms.extend(node.surface_forms);
            existing.strength = node.strength;
            return Ok(());
        }
        if node.hop == 0 {
            if node.id != self.target {
                return Err(GraphError::NotTarget {
                    id: node.id,
                    target: self.target.clone(),
                });
            }
        } else {
            let parent_ok = match &node.discovered_from {
                Some(p) => self.nodes.get(p).is_some_and(|p| p.hop + 1 == node.hop),
                None => self.nodes.values().any(|n| n.hop + 1 == node.hop),
            };
            if !parent_ok {
                return Err(GraphError::OrphanNode {
                    id: node.id,
                    hop: node.hop,
                });
            }
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Adds `src -> dst`. Both endpoints must already be nodes.
    pub fn add_edge(&mut self, edge: MemoryEdge) -> Result<(), GraphError> {
        let fail = |reason: &str| GraphError::InvalidEdge {
            src: edge.src.clone(),
            dst: edge.dst.clone(),
            reason: reason.to_string(),
        };
        if edge.src == edge.dst {
            return Err(fail("self-loop"));
        }
        if !self.nodes.contains_key(&edge.src) || !self.nodes.contains_key(&edge.dst) {
            return Err(fail("endpoint missing"));
        }
        if edge.count == 0 {
            return Err(fail("count must be >= 1"));
        }
        if !(edge.weight > 0.0 && edge.weight <= 1.0) {
            return Err(fail("weight outside (0, 1]"));
        }
        let key = (edge.src.clone(), edge.dst.clone());
        if self.edges.contains_key(&key) {
            return Err(fail("duplicate edge"));
        }
        let out_sum: f64 = self.out_edges(&edge.src).map(|e| e.weight).sum::<f64>() + edge.weight;
        if out_sum > 1.0 + WEIGHT_SUM_SLACK {
            return Err(fail("outgoing weights exceed 1"));
        }
        self.edges.insert(key, edge);
        Ok(())
    }

    /// Directed hop distance from the target to every reachable node.
    pub fn bfs_hops(&self) -> BTreeMap<EntityId, u32> {
        let mut dist = BTreeMap::new();
        if !self.nodes.contains_key(&self.target) {
            return dist;
        }
        dist.insert(self.target.clone(), 0);
        let mut queue = VecDeque::from([self.target.clone()]);
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            for e in self.out_edges(&u) {
                if !dist.contains_key(&e.dst) {
                    dist.insert(e.dst.clone(), d + 1);
                    queue.push_back(e.dst.clone());
                }
            }
        }
        dist
    }

    /// Checks every structural invariant of the graph.
    pub fn validate(&self) -> Result<(), GraphError> {
        let inv = |m: String| Err(GraphError::Invariant(m));
        let roots: Vec<_> = self.nodes.values().filter(|n| n.hop == 0).collect();
        if roots.len() != 1 || roots[0].id != self.target {
            return inv(format!(
                "expected exactly one hop-0 node equal to the target, found {}",
                roots.len()
            ));
        }
        for n in self.nodes.values() {
            if !(0.0..=1.0).contains(&n.strength) {
                return inv(format!("node `{}` strength {} outside [0,1]", n.id, n.strength));
            }
            if n.hop >= 1 && n.strength < self.config.tau {
                return inv(format!(
                    "node `{}` strength {} below tau {}",
                    n.id, n.strength, self.config.tau
                ));
            }
        }
        for e in self.edges.values() {
            if e.src == e.dst {
                return inv(format!("self-loop on `{}`", e.src));
            }
            if !self.nodes.contains_key(&e.src) || !self.nodes.contains_key(&e.dst) {
                return inv(format!("edge {} -> {} has a missing endpoint", e.src, e.dst));
            }
            if e.count == 0 || !(e.weight > 0.0 && e.weight <= 1.0) {
                return inv(format!("edge {} -> {} has count/weight out of range", e.src, e.dst));
            }
        }
        let mut out_sum: BTreeMap<&EntityId, f64> = BTreeMap::new();
        for e in self.edges.values() {
            *out_sum.entry(&e.src).or_default() += e.weight;
        }
        if let Some((u, s)) = out_sum.iter().find(|(_, s)| **s > 1.0 + WEIGHT_SUM_SLACK) {
            return inv(format!("outgoing weights of `{u}` sum to {s}"));
        }
        let hops = self.bfs_hops();
        for n in self.nodes.values() {
            match hops.get(&n.id) {
                Some(d) if *d <= self.config.k => {}
                Some(d) => return inv(format!("node `{}` is {d} hops out (K = {})", n.id, self.config.k)),
                None => return inv(format!("node `{}` unreachable from target", n.id)),
            }
        }
        if !self.budget.within_bound() {
            return inv(format!(
                "budget: {} queries exceed {} x {}",
                self.budget.queries_issued, self.budget.queries_per_iteration, self.budget.iterations
            ));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GraphWire {
    target: EntityId,
    description: Option<String>,
    nodes: Vec<MemoryNode>,
    edges: Vec<MemoryEdge>,
    config: MiningConfig,
    budget: BudgetReport,
}

/// Serializes to pretty JSON; arrays are sorted by id and `(src, dst)`.
pub fn serialize_graph(graph: &MemoryGraph) -> Vec<u8> {
    let wire = GraphWire {
        target: graph.target.clone(),
        description: graph.target_description.clone(),
        nodes: graph.nodes.values().cloned().collect(),
        edges: graph.edges.values().cloned().collect(),
        config: graph.config.clone(),
        budget: graph.budget.clone(),
    };
    let mut out = serde_json::to_vec_pretty(&wire).expect("graph serialization is infallible");
    out.push(b'\n');
    out
}

pub fn deserialize_graph(bytes: &[u8]) -> Result<MemoryGraph, GraphError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let wire: GraphWire = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let mut graph = MemoryGraph::new(wire.target, wire.description, wire.config);
    graph.budget = wire.budget;
    for (i, n) in wire.nodes.into_iter().enumerate() {
        if graph.nodes.insert(n.id.clone(), n).is_some() {
            return Err(GraphError::Schema {
                path: format!("nodes[{i}].id"),
                message: "duplicate node id".into(),
            });
        }
    }
    for (i, e) in wire.edges.into_iter().enumerate() {
        if graph.edges.insert((e.src.clone(), e.dst.clone()), e).is_some() {
            return Err(GraphError::Schema {
                path: format!("edges[{i}]"),
                message: "duplicate edge".into(),
            });
        }
    }
    graph.validate()?;
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn id(s: &str) -> EntityId {
        normalize_mention(s).unwrap()
    }

    fn cfg() -> MiningConfig {
        MiningConfig::default()
    }

    fn rooted() -> MemoryGraph {
        let mut g = MemoryGraph::new(id("Taylor Swift"), None, cfg());
        g.upsert_node(MemoryNode::new(id("taylor swift"), "Taylor Swift", 1.0, 0))
            .unwrap();
        g
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(id("  Taylor  Swift ").as_str(), "taylor swift");
        assert_eq!(id("taylor swift").as_str(), "taylor swift");
        assert_eq!(normalize_mention("!!!"), Err(GraphError::EmptyMention));
        assert_eq!(id("\"Blank Space,\"").as_str(), "blank space");
    }

    #[test]
    fn upsert_semantics() {
        let mut g = MemoryGraph::new(id("t"), None, cfg());
        g.upsert_node(MemoryNode::new(id("t"), "T", 1.0, 0)).unwrap();
        assert_eq!(g.nodes.len(), 1);
        g.upsert_node(MemoryNode::new(id("t"), "t", 1.0, 0)).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.nodes[&id("t")].surface_forms.len(), 2);

        let err = g
            .upsert_node(MemoryNode::new(id("deep"), "deep", 0.5, 2))
            .unwrap_err();
        assert!(matches!(err, GraphError::OrphanNode { hop: 2, .. }));
        assert!(matches!(
            g.upsert_node(MemoryNode::new(id("x"), "x", 1.5, 1)),
            Err(GraphError::StrengthOutOfRange(_))
        ));
        assert!(matches!(
            g.upsert_node(MemoryNode::new(id("x"), "x", 0.5, 0)),
            Err(GraphError::NotTarget { .. })
        ));
    }

    #[test]
    fn edge_weight_examples() {
        let m = |pairs: &[(&str, u64)]| {
            pairs
                .iter()
                .map(|(k, v)| (id(k), *v))
                .collect::<BTreeMap<_, _>>()
        };
        let w = edge_weights(&m(&[("a", 2), ("b", 2)])).unwrap();
        assert_eq!(w[&id("a")], 0.5);
        assert_eq!(w[&id("b")], 0.5);
        let w = edge_weights(&m(&[("a", 3), ("b", 1)])).unwrap();
        assert_eq!((w[&id("a")], w[&id("b")]), (0.75, 0.25));
        assert_eq!(edge_weights(&m(&[("a", 7)])).unwrap()[&id("a")], 1.0);
        assert_eq!(edge_weights(&BTreeMap::new()), Err(GraphError::EmptyNeighborhood));
        assert!(matches!(edge_weights(&m(&[("a", 0)])), Err(GraphError::ZeroCount(_))));
    }

    #[test]
    fn edge_rules() {
        let mut g = rooted();
        let t = g.target.clone();
        g.upsert_node(MemoryNode::new(id("a"), "A", 0.5, 1).with_parent(t.clone()))
            .unwrap();
        let edge = |s: &EntityId, d: &EntityId, w: f64| MemoryEdge {
            src: s.clone(),
            dst: d.clone(),
            count: 1,
            weight: w,
        };
        assert!(g.add_edge(edge(&t, &t, 0.5)).is_err());
        assert!(g.add_edge(edge(&t, &id("zzz"), 0.5)).is_err());
        g.add_edge(edge(&t, &id("a"), 0.5)).unwrap();
        assert!(g.add_edge(edge(&t, &id("a"), 0.1)).is_err());
        g.upsert_node(MemoryNode::new(id("b"), "B", 0.5, 1).with_parent(t.clone()))
            .unwrap();
        assert!(g.add_edge(edge(&t, &id("b"), 0.6)).is_err());
        g.add_edge(edge(&t, &id("b"), 0.5)).unwrap();
        g.validate().unwrap();
    }

    #[test]
    fn validate_catches_unreachable_nodes() {
        let mut g = rooted();
        g.nodes.insert(id("island"), MemoryNode::new(id("island"), "island", 0.5, 1));
        assert!(matches!(g.validate(), Err(GraphError::Invariant(_))));
    }

    #[test]
    fn round_trip_and_determinism() {
        let g = rooted();
        assert_eq!(deserialize_graph(&serialize_graph(&g)).unwrap(), g);

        let mut g = rooted();
        let t = g.target.clone();
        g.upsert_node(MemoryNode::new(id("blank space"), "Blank Space", 0.3, 1).with_parent(t.clone()))
            .unwrap();
        g.add_edge(MemoryEdge {
            src: t,
            dst: id("blank space"),
            count: 3,
            weight: 0.75,
        })
        .unwrap();
        g.budget.iterations = 1;
        g.budget.queries_issued = 10;
        let a = serialize_graph(&g);
        let b = serialize_graph(&g);
        assert_eq!(a, b);
        assert_eq!(deserialize_graph(&a).unwrap(), g);
    }

    #[test]
    fn missing_target_is_a_schema_error() {
        let err = deserialize_graph(br#"{"description": null, "nodes": [], "edges": []}"#).unwrap_err();
        match err {
            GraphError::Schema { message, .. } => assert!(message.contains("target"), "{message}"),
            other => panic!("unexpected {other:?}"),
        }
        let err = deserialize_graph(
            br#"{"target":"t","description":null,"nodes":[{"id":"T"}],"edges":[]}"#,
        )
        .unwrap_err();
        match err {
            GraphError::Schema { path, .. } => assert!(path.starts_with("nodes[0]"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(raw in "\\PC{0,24}") {
            if let Ok(once) = normalize_mention(&raw) {
                prop_assert_eq!(normalize_mention(once.as_str()).unwrap(), once);
            }
        }

        #[test]
        fn weights_sum_to_one(counts in proptest::collection::btree_map("[a-z]{1,6}", 1u64..1000, 1..20)) {
            let m: BTreeMap<EntityId, u64> = counts.into_iter().map(|(k, v)| (id(&k), v)).collect();
            let w = edge_weights(&m).unwrap();
            let sum: f64 = w.values().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12 * w.len() as f64, "{}", sum);
        }
    }
}
