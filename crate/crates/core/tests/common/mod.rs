#![allow(dead_code)]

use std::path::{Path, PathBuf};

use unlearnkit::elicit::{ExtractionMode, FnResponder, MiningConfig, ResponderError};
use unlearnkit::memgraph::{normalize_mention, EntityId, MemoryEdge, MemoryGraph, MemoryNode};
use unlearnkit::oracle::{Fact, OracleWorld};
use unlearnkit::text::replace_word_ci;

pub fn id(s: &str) -> EntityId {
    normalize_mention(s).unwrap()
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Graph from `(src, dst, weight)` triples rooted at `target`. Node hops
/// follow first discovery; strengths are 0.5 except the target.
pub fn graph_from_edges(target: &str, edges: &[(&str, &str, f64)]) -> MemoryGraph {
    let config = MiningConfig { k: 16, ..MiningConfig::default() };
    let mut g = MemoryGraph::new(id(target), None, config);
    g.upsert_node(MemoryNode::new(id(target), target, 1.0, 0)).unwrap();
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
        assert!(pending.len() < before, "fixture has unreachable edges");
    }
    g
}

/// Answers event prompts with "{e1} relates to {e2}." and QA prompts with a
/// question that replaces the QA target's name by "which entity".
pub fn scripted_responder() -> FnResponder<impl Fn(&str, u32) -> Result<String, ResponderError> + Send + Sync> {
    FnResponder(|p: &str, _: u32| {
        let grab = |key: &str| p.lines().find_map(|l| l.strip_prefix(key)).unwrap_or("").to_string();
        Ok(if p.contains("\nEvent 1: ") {
            format!("{} relates to {}.", grab("Event 1: "), grab("Event 2: "))
        } else {
            let target = grab("Target Entity: ");
            let statement = grab("Statement: ");
            let q = replace_word_ci(statement.trim_end_matches('.'), &target, "which entity");
            format!("Question: Regarding this, {q}?\nAnswer: {target}")
        })
    })
}

/// Star-and-chain world of `size` entities with recall probabilities in
/// {0, 1}. Entity 0 is the target.
pub fn certain_world(seed: u64, size: usize, edges: &[(usize, usize, bool)]) -> OracleWorld {
    let name = |i: usize| format!("Entity {}", (b'A' + i as u8) as char);
    assert!(size <= 26);
    let facts = edges
        .iter()
        .map(|&(s, o, recalled)| {
            Fact::new(&name(s), &name(o), "{subject} is associated with {object}.", if recalled { 1.0 } else { 0.0 })
        })
        .collect();
    OracleWorld::new(seed, facts)
}

pub fn heuristic_config() -> MiningConfig {
    MiningConfig { extraction: ExtractionMode::Heuristic, ..MiningConfig::default() }
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
