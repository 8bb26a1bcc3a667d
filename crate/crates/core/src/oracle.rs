//! Seeded synthetic responder backed by a ground-truth fact graph.
//!
//! The oracle answers every registry prompt:
//!
//! * elicitation prompts: each fact whose subject is the prompt's anchor is
//!   recalled independently with its `recall_prob`; with probability
//!   `hallucination_prob` one entity drawn uniformly from the hallucination
//!   pool is mentioned as well. Statements come back as numbered lines.
//! * extraction prompts: the world's entity names found in the text, one per
//!   occurrence, longest match first.
//! * event prompts: the statement of a fact linking the two events, a chain
//!   sentence when they are only indirectly linked, or `UNKNOWN`.
//! * QA prompts: the statement rewritten as a question whose answer is the
//!   target entity.
//!
//! Randomness is keyed by `(seed, sha256(prompt), sample_index)`, so calls are
//! independent of ordering and safe to issue concurrently.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::elicit::prompts::{parse_prompt, ParsedPrompt};
use crate::elicit::{best_path_products, MiningConfig, Responder, ResponderError};
use crate::memgraph::{normalize_mention, EntityId, MemoryEdge, MemoryGraph, MemoryNode};
use crate::text::{find_all, replace_word_ci};

/// Retention probability a node needs to appear in [`expected_graph`].
pub const RETENTION_BAR: f64 = 0.999;

const NOTHING_RECALLED: &str = "I cannot recall anything specific.";

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("unrecognized prompt")]
    UnrecognizedPrompt,
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("reading world {path}: {message}")]
    Load { path: String, message: String },
}

fn default_template() -> String {
    "{subject} is associated with {object}.".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub object: String,
    #[serde(default = "default_template")]
    pub template: String,
    pub recall_prob: f64,
}

impl Fact {
    pub fn new(subject: &str, object: &str, template: &str, recall_prob: f64) -> Self {
        Self {
            subject: subject.into(),
            object: object.into(),
            template: template.into(),
            recall_prob,
        }
    }

    pub fn statement(&self) -> String {
        self.template
            .replace("{subject}", &self.subject)
            .replace("{object}", &self.object)
    }
}

/// Ground truth for the synthetic responder. Entity names are kept as surface
/// strings; identity is their normalized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleWorld {
    pub seed: u64,
    #[serde(default)]
    pub hallucination_prob: f64,
    #[serde(default)]
    pub hallucination_pool: Vec<String>,
    pub facts: Vec<Fact>,
}

impl OracleWorld {
    pub fn new(seed: u64, facts: Vec<Fact>) -> Self {
        Self {
            seed,
            hallucination_prob: 0.0,
            hallucination_pool: Vec::new(),
            facts,
        }
    }

    pub fn with_hallucinations(mut self, prob: f64, pool: &[&str]) -> Self {
        self.hallucination_prob = prob;
        self.hallucination_pool = pool.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::InvalidWorld(m));
        let norm = |s: &str| {
            normalize_mention(s).map_err(|_| OracleError::InvalidWorld(format!("empty entity name {s:?}")))
        };
        if !(0.0..1.0).contains(&self.hallucination_prob) {
            return bad(format!("hallucination_prob {} outside [0, 1)", self.hallucination_prob));
        }
        let mut fact_entities = BTreeSet::new();
        for (i, f) in self.facts.iter().enumerate() {
            let (s, o) = (norm(&f.subject)?, norm(&f.object)?);
            if s == o {
                return bad(format!("facts[{i}]: subject equals object"));
            }
            if !(0.0..=1.0).contains(&f.recall_prob) {
                return bad(format!("facts[{i}]: recall_prob {} outside [0, 1]", f.recall_prob));
            }
            if !f.template.contains("{subject}") || !f.template.contains("{object}") {
                return bad(format!("facts[{i}]: template must contain {{subject}} and {{object}}"));
            }
            fact_entities.insert(s);
            fact_entities.insert(o);
        }
        for p in &self.hallucination_pool {
            if fact_entities.contains(&norm(p)?) {
                return bad(format!("hallucination pool entry {p:?} is also a fact entity"));
            }
        }
        Ok(())
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, OracleError> {
        let world: Self = serde_json::from_slice(bytes)
            .map_err(|e| OracleError::InvalidWorld(e.to_string()))?;
        world.validate()?;
        Ok(world)
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let bytes = std::fs::read(path).map_err(|e| OracleError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&bytes).map_err(|e| OracleError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Canonical surfaces of every entity the world knows, longest first.
fn known_names(world: &OracleWorld) -> Vec<String> {
    let mut seen = BTreeMap::new();
    let all = world
        .facts
        .iter()
        .flat_map(|f| [&f.subject, &f.object])
        .chain(world.hallucination_pool.iter());
    for name in all {
        if let Ok(id) = normalize_mention(name) {
            seen.entry(id).or_insert_with(|| name.clone());
        }
    }
    let mut names: Vec<String> = seen.into_values().collect();
    names.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)));
    names
}

/// Known-entity mentions in `text`, in reading order.
fn scan_mentions(names: &[String], text: &str) -> Vec<String> {
    let mut claimed: Vec<(usize, usize, &str)> = Vec::new();
    for name in names {
        for r in find_all(text, name, true) {
            if claimed.iter().all(|(s, e, _)| r.end <= *s || r.start >= *e) {
                claimed.push((r.start, r.end, name));
            }
        }
    }
    claimed.sort();
    claimed.into_iter().map(|(_, _, n)| n.to_string()).collect()
}

/// The synthetic responder.
#[derive(Debug, Clone)]
pub struct OracleResponder {
    world: OracleWorld,
    names: Vec<String>,
    by_subject: BTreeMap<EntityId, Vec<usize>>,
}

impl OracleResponder {
    pub fn new(world: OracleWorld) -> Result<Self, OracleError> {
        world.validate()?;
        let mut by_subject: BTreeMap<EntityId, Vec<usize>> = BTreeMap::new();
        for (i, f) in world.facts.iter().enumerate() {
            by_subject
                .entry(normalize_mention(&f.subject).expect("validated"))
                .or_default()
                .push(i);
        }
        Ok(Self {
            names: known_names(&world),
            world,
            by_subject,
        })
    }

    pub fn world(&self) -> &OracleWorld {
        &self.world
    }

    fn rng(&self, prompt: &str, sample_index: u32) -> ChaCha8Rng {
        let digest = Sha256::new()
            .chain_update(self.world.seed.to_le_bytes())
            .chain_update(Sha256::digest(prompt.as_bytes()))
            .chain_update(sample_index.to_le_bytes())
            .finalize();
        ChaCha8Rng::from_seed(digest.into())
    }

    fn facts_of(&self, anchor: &str) -> &[usize] {
        normalize_mention(anchor)
            .ok()
            .and_then(|id| self.by_subject.get(&id))
            .map_or(&[], Vec::as_slice)
    }

    fn elicit(&self, anchor: &str, prompt: &str, sample_index: u32) -> String {
        let mut rng = self.rng(prompt, sample_index);
        let mut lines = Vec::new();
        for &i in self.facts_of(anchor) {
            let f = &self.world.facts[i];
            if rng.gen::<f64>() < f.recall_prob {
                lines.push(f.statement());
            }
        }
        let pool = &self.world.hallucination_pool;
        if rng.gen::<f64>() < self.world.hallucination_prob && !pool.is_empty() {
            let pick = &pool[rng.gen_range(0..pool.len())];
            lines.push(format!("{anchor} is sometimes linked to {pick}."));
        }
        if lines.is_empty() {
            return NOTHING_RECALLED.to_string();
        }
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| format!("{}. {l}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn event(&self, event_1: &str, event_2: &str) -> String {
        let (Ok(a), Ok(b)) = (normalize_mention(event_1), normalize_mention(event_2)) else {
            return "UNKNOWN".into();
        };
        if a == b {
            return "UNKNOWN".into();
        }
        let ends = |f: &Fact| {
            (
                normalize_mention(&f.subject).expect("validated"),
                normalize_mention(&f.object).expect("validated"),
            )
        };
        if let Some(f) = self.world.facts.iter().find(|f| {
            let (s, o) = ends(f);
            (s == a && o == b) || (s == b && o == a)
        }) {
            return f.statement();
        }
        // Indirect link: shortest undirected fact chain.
        let mut adj: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for f in &self.world.facts {
            let (s, o) = ends(f);
            adj.entry(s.clone()).or_default().insert(o.clone());
            adj.entry(o).or_default().insert(s);
        }
        let mut prev: BTreeMap<EntityId, EntityId> = BTreeMap::new();
        let mut queue = VecDeque::from([a.clone()]);
        let mut seen = BTreeSet::from([a.clone()]);
        while let Some(u) = queue.pop_front() {
            if u == b {
                let mut hop = prev[&b].clone();
                while prev.get(&hop).is_some_and(|p| *p != a) {
                    hop = prev[&hop].clone();
                }
                let via = self
                    .names
                    .iter()
                    .find(|n| normalize_mention(n).ok().as_ref() == Some(&hop))
                    .cloned()
                    .unwrap_or_else(|| hop.to_string());
                return format!("{event_1} and {event_2} are connected through {via}.");
            }
            for v in adj.get(&u).into_iter().flatten() {
                if seen.insert(v.clone()) {
                    prev.insert(v.clone(), u.clone());
                    queue.push_back(v.clone());
                }
            }
        }
        "UNKNOWN".into()
    }

    fn qa(&self, target: &str, statement: &str) -> String {
        let body = statement.trim().trim_end_matches(['.', '!', '?']);
        let question = if find_all(body, target, true).is_empty() {
            format!("Which entity is connected to the following: {body}?")
        } else {
            let q = replace_word_ci(body, target, "which entity");
            let mut chars = q.chars();
            match chars.next() {
                Some(c) => format!("{}{}?", c.to_uppercase(), chars.as_str()),
                None => "Which entity?".to_string(),
            }
        };
        format!("Question: {question}\nAnswer: {target}")
    }

    /// Deterministic completion for a registry prompt.
    pub fn oracle_complete(&self, prompt: &str, sample_index: u32) -> Result<String, OracleError> {
        match parse_prompt(prompt).ok_or(OracleError::UnrecognizedPrompt)? {
            ParsedPrompt::Hop0 { target } => Ok(self.elicit(&target, prompt, sample_index)),
            ParsedPrompt::NeighborHop { neighbor, .. } => Ok(self.elicit(&neighbor, prompt, sample_index)),
            ParsedPrompt::Extraction { text } => Ok(scan_mentions(&self.names, &text).join("\n")),
            ParsedPrompt::Event { event_1, event_2, .. } => Ok(self.event(&event_1, &event_2)),
            ParsedPrompt::Qa { target, event, .. } => Ok(self.qa(&target, &event)),
        }
    }
}

impl Responder for OracleResponder {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        self.oracle_complete(prompt, sample_index)
            .map_err(|_| ResponderError::UnrecognizedPrompt)
    }
}

/// `P(Binomial(n, p) >= k)`, summed exactly term by term.
pub fn binomial_tail(n: u32, p: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    let mut total = 0.0;
    let mut coeff = 1.0; // C(n, j)
    for j in 0..=n {
        if j > 0 {
            coeff = coeff * (n - j + 1) as f64 / j as f64;
        }
        if j >= k {
            total += coeff * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32);
        }
    }
    total.min(1.0)
}

struct Candidate {
    surface: String,
    /// Per-response probability of at least one mention.
    inclusion: f64,
    /// Expected mentions per response.
    rate: f64,
}

fn anchor_candidates(
    oracle: &OracleResponder,
    anchor: &EntityId,
    target: &EntityId,
) -> BTreeMap<EntityId, Candidate> {
    let world = &oracle.world;
    let mut miss: BTreeMap<EntityId, f64> = BTreeMap::new();
    let mut out: BTreeMap<EntityId, Candidate> = BTreeMap::new();
    let mut touch = |name: &str, p_present: f64, rate: f64, out: &mut BTreeMap<EntityId, Candidate>| {
        let Ok(id) = normalize_mention(name) else { return };
        if id == *anchor || id == *target {
            return;
        }
        *miss.entry(id.clone()).or_insert(1.0) *= 1.0 - p_present;
        let c = out.entry(id).or_insert_with(|| Candidate {
            surface: name.to_string(),
            inclusion: 0.0,
            rate: 0.0,
        });
        c.rate += rate;
    };
    for &i in oracle.by_subject.get(anchor).map_or(&[][..], Vec::as_slice) {
        let f = &world.facts[i];
        let mentions = scan_mentions(&oracle.names, &f.statement());
        let mut per_fact: BTreeMap<&str, u32> = BTreeMap::new();
        for m in &mentions {
            *per_fact.entry(m).or_default() += 1;
        }
        for (name, occ) in per_fact {
            touch(name, f.recall_prob, f.recall_prob * occ as f64, &mut out);
        }
    }
    let pool = &world.hallucination_pool;
    if !pool.is_empty() {
        let each = world.hallucination_prob / pool.len() as f64;
        for name in pool {
            touch(name, each, each, &mut out);
        }
    }
    for (id, c) in out.iter_mut() {
        c.inclusion = 1.0 - miss[id];
    }
    out
}

/// Analytic reference graph: nodes whose retention probability under
/// `(N, tau)` exceeds [`RETENTION_BAR`], edges weighted by expected extraction
/// counts. Exact when every recall probability is 0 or 1 and nothing is
/// hallucinated.
pub fn expected_graph(world: &OracleWorld, config: &MiningConfig, target: &str) -> MemoryGraph {
    let oracle = OracleResponder::new(world.clone()).expect("world must be valid");
    let target_id = normalize_mention(target).expect("target must be non-empty");
    let mut graph = MemoryGraph::new(target_id.clone(), None, config.clone());
    graph
        .upsert_node(MemoryNode::new(target_id.clone(), target.trim(), 1.0, 0))
        .expect("root insert");
    let kmin = config.min_mentions();
    let n = config.n as f64;
    let mut frontier = vec![target_id.clone()];
    for hop in 0..config.k {
        frontier.sort();
        if let (Some(t), true) = (config.adaptive_stop_threshold, hop > 0) {
            let products = best_path_products(&graph);
            frontier.retain(|u| products.get(u).copied().unwrap_or(0.0) >= t);
        }
        let remaining = config.max_iterations - graph.budget.iterations;
        if frontier.len() as u64 > remaining {
            graph.budget.truncated = true;
            frontier.truncate(remaining as usize);
        }
        let mut next = Vec::new();
        for u in &frontier {
            graph.budget.iterations += 1;
            graph.budget.queries_issued += config.n as u64;
            let cands = anchor_candidates(&oracle, u, &target_id);
            let total: f64 = cands.values().map(|c| c.rate).sum();
            for (v, c) in &cands {
                let expected_count = (c.rate * n).round() as u64;
                if binomial_tail(config.n, c.inclusion, kmin) <= RETENTION_BAR || expected_count == 0 {
                    continue;
                }
                match graph.nodes.get_mut(v) {
                    Some(node) => {
                        node.surface_forms.insert(c.surface.clone());
                    }
                    None => {
                        let node = MemoryNode::new(v.clone(), c.surface.clone(), c.inclusion, hop + 1)
                            .with_parent(u.clone());
                        graph.upsert_node(node).expect("parent exists");
                        next.push(v.clone());
                    }
                }
                graph
                    .add_edge(MemoryEdge {
                        src: u.clone(),
                        dst: v.clone(),
                        count: expected_count,
                        weight: c.rate / total,
                    })
                    .expect("expected edge is valid");
            }
        }
        if graph.budget.truncated {
            break;
        }
        frontier = next;
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elicit::prompts::{render_event_prompt, render_extraction_prompt, render_prompt, render_qa_prompt, PromptKind};

    fn swift_world() -> OracleWorld {
        OracleWorld::new(
            7,
            vec![
                Fact::new("Taylor Swift", "Blank Space", "{subject} released {object}.", 1.0),
                Fact::new("Blank Space", "2014", "{subject} came out in {object}.", 1.0),
            ],
        )
    }

    fn hop0(target: &str) -> String {
        render_prompt(PromptKind::Hop0, target, None, None).unwrap()
    }

    #[test]
    fn certain_recall_appears() {
        let o = OracleResponder::new(swift_world()).unwrap();
        for i in 0..5 {
            let r = o.oracle_complete(&hop0("Taylor Swift"), i).unwrap();
            assert!(r.contains("Blank Space"), "{r}");
        }
    }

    #[test]
    fn completions_are_deterministic() {
        let w = swift_world().with_hallucinations(0.5, &["Ghost"]);
        let o = OracleResponder::new(w).unwrap();
        let p = hop0("Taylor Swift");
        assert_eq!(o.oracle_complete(&p, 3).unwrap(), o.oracle_complete(&p, 3).unwrap());
    }

    #[test]
    fn hallucination_rate_for_default_seed() {
        // Stream enumerated once for seed 7 and frozen: 5 of 10 samples
        // hallucinate, matching the expected count 0.5 * 10.
        let w = swift_world().with_hallucinations(0.5, &["Ghost"]);
        let o = OracleResponder::new(w).unwrap();
        let p = hop0("Taylor Swift");
        let hits: Vec<u32> = (0..10)
            .filter(|i| o.oracle_complete(&p, *i).unwrap().contains("Ghost"))
            .collect();
        assert!((1..=9).contains(&hits.len()), "{hits:?}");
        assert_eq!(hits, FROZEN_GHOST_SAMPLES);
    }

    const FROZEN_GHOST_SAMPLES: &[u32] = &[0, 1, 6, 7, 8];

    #[test]
    fn unknown_prompt_is_rejected() {
        let o = OracleResponder::new(swift_world()).unwrap();
        assert!(matches!(o.oracle_complete("hi", 0), Err(OracleError::UnrecognizedPrompt)));
    }

    #[test]
    fn extraction_lists_known_names() {
        let o = OracleResponder::new(swift_world()).unwrap();
        let r = o
            .oracle_complete(&render_extraction_prompt("1. Taylor Swift released Blank Space.\n2. Blank Space came out in 2014."), 0)
            .unwrap();
        assert_eq!(r, "Taylor Swift\nBlank Space\nBlank Space\n2014");
    }

    #[test]
    fn event_synthesis() {
        let o = OracleResponder::new(swift_world()).unwrap();
        let r = o.oracle_complete(&render_event_prompt("Taylor Swift", "Blank Space", "2014"), 0).unwrap();
        assert_eq!(r, "Blank Space came out in 2014.");
        let r = o.oracle_complete(&render_event_prompt("Taylor Swift", "Taylor Swift", "2014"), 0).unwrap();
        assert_eq!(r, "Taylor Swift and 2014 are connected through Blank Space.");
        let r = o.oracle_complete(&render_event_prompt("Taylor Swift", "Blank Space", "Mars"), 0).unwrap();
        assert_eq!(r, "UNKNOWN");
    }

    #[test]
    fn qa_rendering_moves_target_to_answer() {
        let o = OracleResponder::new(swift_world()).unwrap();
        let r = o
            .oracle_complete(&render_qa_prompt("Taylor Swift", "Blank Space", "Taylor Swift released Blank Space in 2014."), 0)
            .unwrap();
        assert_eq!(r, "Question: Which entity released Blank Space in 2014?\nAnswer: Taylor Swift");
    }

    #[test]
    fn world_validation() {
        let mut w = swift_world();
        w.facts.push(Fact::new("A", "a", "{subject} {object}", 0.5));
        assert!(w.validate().is_err());
        let w = swift_world().with_hallucinations(0.1, &["blank space"]);
        assert!(w.validate().is_err());
        let w = swift_world().with_hallucinations(1.0, &["x"]);
        assert!(w.validate().is_err());
        let mut w = swift_world();
        w.facts[0].template = "{subject} only".into();
        assert!(w.validate().is_err());
    }

    #[test]
    fn world_json_format() {
        let json = br#"{"seed": 3, "hallucination_prob": 0.1, "hallucination_pool": ["Ghost"],
            "facts": [{"subject": "A", "object": "B", "template": "{subject} met {object}.", "recall_prob": 0.5}]}"#;
        let w = OracleWorld::from_json(json).unwrap();
        assert_eq!(w.facts[0].statement(), "A met B.");
        assert!(OracleWorld::from_json(b"{\"facts\": []}").is_err());
    }

    #[test]
    fn binomial_tail_values() {
        // P(X >= 2), X ~ Bin(10, 0.05) = 1 - 0.95^10 - 10 * 0.05 * 0.95^9
        let direct = 1.0 - 0.95f64.powi(10) - 10.0 * 0.05 * 0.95f64.powi(9);
        assert!((binomial_tail(10, 0.05, 2) - direct).abs() < 1e-12);
        assert!((binomial_tail(10, 0.05, 2) - 0.0861).abs() < 1e-4);
        assert_eq!(binomial_tail(10, 1.0, 10), 1.0);
        assert_eq!(binomial_tail(10, 0.3, 0), 1.0);
        assert_eq!(binomial_tail(10, 0.3, 11), 0.0);
    }

    #[test]
    fn expected_graph_examples() {
        let cfg = MiningConfig { k: 1, ..MiningConfig::default() };
        let g = expected_graph(&swift_world(), &cfg, "Taylor Swift");
        assert_eq!(g.nodes.len(), 2);
        let e = g.edge(&normalize_mention("taylor swift").unwrap(), &normalize_mention("blank space").unwrap()).unwrap();
        assert_eq!((e.count, e.weight), (10, 1.0));

        let w = OracleWorld::new(1, vec![Fact::new("T", "Faint", "{subject} saw {object}.", 0.05)]);
        assert_eq!(expected_graph(&w, &cfg, "T").nodes.len(), 1);

        let g = expected_graph(&OracleWorld::new(1, vec![]), &cfg, "T");
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
    }
}
