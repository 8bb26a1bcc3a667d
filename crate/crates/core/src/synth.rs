//! Turning sampled paths into scoped QA supervision.
//!
//! Every adjacent pair on a forget path becomes a one-sentence event
//! statement, which is then rewritten into a question whose answer names the
//! target. Neighbor paths go through the same two steps anchored at their
//! first node, and never mention the target at all.
//!
//! Call indices: an event prompt seen for the `k`-th time is sent with
//! `sample_index = k`; a QA prompt seen for the `k`-th time uses `2k`, and
//! `2k + 1` for its single retry. Repeated prompts therefore stay distinct
//! in transcripts and replay exactly.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elicit::prompts::{render_event_prompt, render_qa_prompt};
use crate::elicit::{Responder, ResponderError};
use crate::memgraph::{EntityId, MemoryGraph};
use crate::sampler::{MemoryPath, PathKind};
use crate::text::{contains_ci, find_all};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("responder failed: {0}")]
    Responder(#[from] ResponderError),
    #[error("no `Question: ... Answer: ...` pair in response")]
    UnparseableQa,
    #[error("QA rejected: {0}")]
    Rejected(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot reach ratio {ratio} with {correct} correct and {incorrect} incorrect samples")]
    InfeasibleRatio { ratio: f64, correct: usize, incorrect: usize },
    #[error("dataset line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventStatus {
    Ok,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStatement {
    pub pair: (EntityId, EntityId),
    /// Anchor the event was asked about.
    pub target: EntityId,
    pub text: String,
    pub status: EventStatus,
}

impl EventStatement {
    fn unknown(pair: (EntityId, EntityId), target: EntityId) -> Self {
        Self { pair, target, text: String::new(), status: EventStatus::Unknown }
    }
}

/// One QA training example. Field order is the JSONL field order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupervisionSample {
    pub kind: PathKind,
    pub question: String,
    pub answer: String,
    pub target: EntityId,
    pub obj: EntityId,
    pub event: String,
    pub source_path: Vec<EntityId>,
    /// Char offsets of the answer in [`rendering`](Self::rendering).
    pub answer_span: (usize, usize),
    pub multiplicity: u32,
}

const QUESTION_PREFIX: &str = "Question: ";
const ANSWER_INFIX: &str = " Answer: ";

impl SupervisionSample {
    /// `Question: {q} Answer: {a}`, the text `answer_span` indexes into.
    pub fn rendering(&self) -> String {
        format!("{QUESTION_PREFIX}{}{ANSWER_INFIX}{}", self.question, self.answer)
    }

    /// The `answer_span` slice of the rendering.
    pub fn span_text(&self) -> String {
        let (s, e) = self.answer_span;
        self.rendering().chars().skip(s).take(e.saturating_sub(s)).collect()
    }
}

fn answer_span(question: &str, answer: &str) -> (usize, usize) {
    let start = QUESTION_PREFIX.chars().count() + question.chars().count() + ANSWER_INFIX.chars().count();
    (start, start + answer.chars().count())
}

fn mentions_any(text: &str, forms: &[String]) -> bool {
    forms.iter().any(|f| contains_ci(text, f))
}

/// Cuts `text` after its first sentence terminator.
fn first_sentence(text: &str) -> &str {
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|(_, n)| n.is_whitespace()) {
            return &text[..i + c.len_utf8()];
        }
    }
    text
}

/// Event statement for `pair`, asked about `target`.
///
/// An `UNKNOWN` first line, or a sentence that does not literally name both
/// pair members, yields [`EventStatus::Unknown`].
pub fn synthesize_event(
    graph: &MemoryGraph,
    pair: (&EntityId, &EntityId),
    target: &EntityId,
    responder: &dyn Responder,
    sample_index: u32,
) -> Result<EventStatement, SynthError> {
    for id in [pair.0, pair.1, target] {
        if graph.node(id).is_none() {
            return Err(SynthError::Precondition(format!("`{id}` is not in the graph")));
        }
    }
    let prompt = render_event_prompt(
        graph.display_name(target),
        graph.display_name(pair.0),
        graph.display_name(pair.1),
    );
    let response = responder.complete(&prompt, sample_index)?;
    let owned = (pair.0.clone(), pair.1.clone());
    let line = response.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if line.is_empty() || line.eq_ignore_ascii_case("UNKNOWN") {
        return Ok(EventStatement::unknown(owned, target.clone()));
    }
    let text = first_sentence(line).trim();
    let named = |id: &EntityId| mentions_any(text, &graph.surface_forms(id));
    if !named(pair.0) || !named(pair.1) {
        log::debug!("event for ({}, {}) does not name both members", pair.0, pair.1);
        return Ok(EventStatement::unknown(owned, target.clone()));
    }
    Ok(EventStatement { pair: owned, target: target.clone(), text: text.to_string(), status: EventStatus::Ok })
}

/// Splits `Question: ... Answer: ...`, case-insensitively.
pub fn parse_qa(response: &str) -> Option<(String, String)> {
    let q = find_all(response, "question:", false).into_iter().next()?;
    let a = find_all(&response[q.end..], "answer:", false).into_iter().next()?;
    let question = response[q.end..q.end + a.start].trim();
    let answer = response[q.end + a.end..].lines().next().unwrap_or("").trim();
    (!question.is_empty() && !answer.is_empty()).then(|| (collapse(question), collapse(answer)))
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

struct QaRequest<'a> {
    kind: PathKind,
    /// Entity the answer must name; also the QA prompt's target.
    answer_entity: &'a EntityId,
    obj: &'a EntityId,
    /// Entity whose names must not appear where forbidden.
    scoped: &'a EntityId,
    event: &'a EventStatement,
}

impl QaRequest<'_> {
    fn prompt(&self, graph: &MemoryGraph) -> String {
        render_qa_prompt(
            graph.display_name(self.answer_entity),
            graph.display_name(self.obj),
            &self.event.text,
        )
    }

    fn check(&self, graph: &MemoryGraph, question: &str, answer: &str) -> Result<(), SynthError> {
        let answer_forms = graph.surface_forms(self.answer_entity);
        if !mentions_any(answer, &answer_forms) {
            return Err(SynthError::Rejected(format!("answer does not name `{}`", self.answer_entity)));
        }
        let scoped = graph.surface_forms(self.scoped);
        match self.kind {
            PathKind::Forget if mentions_any(question, &scoped) => {
                Err(SynthError::Rejected("question names the target".into()))
            }
            PathKind::Neighbor if mentions_any(question, &scoped) || mentions_any(answer, &scoped) => {
                Err(SynthError::Rejected("neighbor QA names the target".into()))
            }
            _ => Ok(()),
        }
    }

    /// Sends the QA prompt at `2k`, retrying once at `2k + 1`.
    fn run(&self, graph: &MemoryGraph, responder: &dyn Responder, k: u32) -> Result<SupervisionSample, SynthError> {
        if self.event.status != EventStatus::Ok {
            return Err(SynthError::Precondition("event status is Unknown".into()));
        }
        let prompt = self.prompt(graph);
        let mut last = SynthError::UnparseableQa;
        for idx in [2 * k, 2 * k + 1] {
            let response = responder.complete(&prompt, idx)?;
            let attempt = parse_qa(&response)
                .ok_or(SynthError::UnparseableQa)
                .and_then(|(q, a)| self.check(graph, &q, &a).map(|_| (q, a)));
            match attempt {
                Ok((question, answer)) => {
                    return Ok(SupervisionSample {
                        kind: self.kind,
                        answer_span: answer_span(&question, &answer),
                        question,
                        answer,
                        target: self.scoped.clone(),
                        obj: self.obj.clone(),
                        event: self.event.text.clone(),
                        source_path: vec![self.event.pair.0.clone(), self.event.pair.1.clone()],
                        multiplicity: 1,
                    })
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

/// Forget QA for an `Ok` event about the graph target; `obj` must be in the
/// event's pair. Uses QA call indices `2k` and `2k + 1`.
pub fn synthesize_forget_qa(
    graph: &MemoryGraph,
    event: &EventStatement,
    obj: &EntityId,
    responder: &dyn Responder,
    k: u32,
) -> Result<SupervisionSample, SynthError> {
    if *obj != event.pair.0 && *obj != event.pair.1 {
        return Err(SynthError::Precondition(format!("`{obj}` is not in the event pair")));
    }
    QaRequest { kind: PathKind::Forget, answer_entity: &graph.target, obj, scoped: &graph.target, event }
        .run(graph, responder, k)
}

fn check_neighbor_path(graph: &MemoryGraph, path: &MemoryPath) -> Result<(), SynthError> {
    if path.nodes.len() < 2 {
        return Err(SynthError::Precondition("neighbor path shorter than two nodes".into()));
    }
    if path.nodes.contains(&graph.target) {
        return Err(SynthError::Precondition("neighbor path contains the target".into()));
    }
    Ok(())
}

fn neighbor_qa(
    graph: &MemoryGraph,
    path: &MemoryPath,
    event: &EventStatement,
    responder: &dyn Responder,
    k: u32,
) -> Result<SupervisionSample, SynthError> {
    let (a, b) = (&path.nodes[0], &path.nodes[1]);
    let mut s = QaRequest { kind: PathKind::Neighbor, answer_entity: a, obj: b, scoped: &graph.target, event }
        .run(graph, responder, k)?;
    s.source_path = path.nodes.clone();
    Ok(s)
}

/// Neighbor QA for the first pair of `path`, answered by the path's start
/// node. The event uses call index `k`, the QA `2k` and `2k + 1`.
pub fn synthesize_neighbor_qa(
    graph: &MemoryGraph,
    path: &MemoryPath,
    responder: &dyn Responder,
    k: u32,
) -> Result<SupervisionSample, SynthError> {
    check_neighbor_path(graph, path)?;
    let (a, b) = (&path.nodes[0], &path.nodes[1]);
    let event = synthesize_event(graph, (a, b), a, responder, k)?;
    if event.status != EventStatus::Ok {
        return Err(SynthError::Precondition("event status is Unknown".into()));
    }
    neighbor_qa(graph, path, &event, responder, k)
}

/// Per-run tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthReport {
    pub forget_pairs: usize,
    pub neighbor_paths: usize,
    pub unknown_events: usize,
    pub rejected: usize,
    pub responder_failures: usize,
    pub precondition_failures: usize,
    pub duplicates_removed: usize,
    pub forget_samples: usize,
    pub neighbor_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Datasets {
    pub forget: Vec<SupervisionSample>,
    pub neighbor: Vec<SupervisionSample>,
    pub report: SynthReport,
}

/// `k`-th occurrence index of each key, in order.
fn occurrences<K: std::hash::Hash + Eq + Clone>(keys: impl IntoIterator<Item = K>) -> Vec<u32> {
    let mut seen: HashMap<K, u32> = HashMap::new();
    keys.into_iter()
        .map(|key| {
            let n = seen.entry(key).or_insert(0);
            *n += 1;
            *n - 1
        })
        .collect()
}

/// Collapses equal `(question, answer)` pairs into the first occurrence,
/// summing multiplicities. Returns the number of removed entries.
pub fn dedup_samples(samples: Vec<SupervisionSample>) -> (Vec<SupervisionSample>, usize) {
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut out: Vec<SupervisionSample> = Vec::new();
    let mut removed = 0;
    for s in samples {
        match index.get(&(s.question.clone(), s.answer.clone())) {
            Some(&i) => {
                out[i].multiplicity += s.multiplicity;
                removed += 1;
            }
            None => {
                index.insert((s.question.clone(), s.answer.clone()), out.len());
                out.push(s);
            }
        }
    }
    (out, removed)
}

fn tally<T>(report: &mut SynthReport, r: Result<T, SynthError>, what: &str) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            match &e {
                SynthError::Responder(_) => report.responder_failures += 1,
                SynthError::Precondition(_) => report.precondition_failures += 1,
                _ => report.rejected += 1,
            }
            log::warn!("skipping {what}: {e}");
            None
        }
    }
}

/// Forget and neighbor datasets from sampled paths.
///
/// Forget paths yield one candidate per adjacent pair with `obj` set to the
/// earlier node; neighbor paths yield one candidate each. Output follows
/// (path index, window index) order whatever the completion order, and
/// per-item failures are counted and skipped.
pub fn build_datasets(
    graph: &MemoryGraph,
    forget_paths: &[MemoryPath],
    neighbor_paths: &[MemoryPath],
    responder: &dyn Responder,
    parallelism: usize,
) -> Datasets {
    let pool = crate::thread_pool(parallelism);
    let mut report = SynthReport::default();

    let windows: Vec<(&MemoryPath, &EntityId, &EntityId)> = forget_paths
        .iter()
        .flat_map(|p| p.nodes.windows(2).map(move |w| (p, &w[0], &w[1])))
        .collect();
    report.forget_pairs = windows.len();
    report.neighbor_paths = neighbor_paths.len();

    // Events: forget windows first, then neighbor paths.
    let mut event_jobs: Vec<(&EntityId, &EntityId, &EntityId)> =
        windows.iter().map(|(_, u, v)| (*u, *v, &graph.target)).collect();
    let mut neighbor_ok = Vec::new();
    for p in neighbor_paths {
        match check_neighbor_path(graph, p) {
            Ok(()) => {
                neighbor_ok.push(p);
                event_jobs.push((&p.nodes[0], &p.nodes[1], &p.nodes[0]));
            }
            Err(e) => {
                tally::<()>(&mut report, Err(e), "neighbor path");
            }
        }
    }
    let event_idx = occurrences(event_jobs.iter().map(|(u, v, t)| (*u, *v, *t)));
    let events_raw: Vec<Result<EventStatement, SynthError>> = pool.install(|| {
        event_jobs
            .par_iter()
            .zip(&event_idx)
            .map(|((u, v, t), k)| synthesize_event(graph, (u, v), t, responder, *k))
            .collect()
    });
    let mut events: Vec<Option<EventStatement>> = Vec::with_capacity(events_raw.len());
    for r in events_raw {
        events.push(match tally(&mut report, r, "event") {
            Some(e) if e.status == EventStatus::Ok => Some(e),
            Some(_) => {
                report.unknown_events += 1;
                None
            }
            None => None,
        });
    }
    let neighbor_events = events.split_off(windows.len());

    // QA: call indices keyed by the rendered QA prompt.
    let forget_jobs: Vec<(usize, &EventStatement)> =
        events.iter().enumerate().filter_map(|(i, e)| e.as_ref().map(|e| (i, e))).collect();
    let forget_keys = forget_jobs.iter().map(|(_, e)| {
        QaRequest { kind: PathKind::Forget, answer_entity: &graph.target, obj: &e.pair.0, scoped: &graph.target, event: e }
            .prompt(graph)
    });
    let neighbor_jobs: Vec<(&MemoryPath, &EventStatement)> = neighbor_ok
        .iter()
        .zip(&neighbor_events)
        .filter_map(|(p, e)| e.as_ref().map(|e| (*p, e)))
        .collect();
    let neighbor_keys = neighbor_jobs.iter().map(|(p, e)| {
        QaRequest { kind: PathKind::Neighbor, answer_entity: &p.nodes[0], obj: &p.nodes[1], scoped: &graph.target, event: e }
            .prompt(graph)
    });
    let qa_idx = occurrences(forget_keys.chain(neighbor_keys));
    let (forget_idx, neighbor_idx) = qa_idx.split_at(forget_jobs.len());

    let (forget, neighbor) = pool.install(|| {
        let forget: Vec<_> = forget_jobs
            .par_iter()
            .zip(forget_idx)
            .map(|((i, e), k)| {
                synthesize_forget_qa(graph, e, &e.pair.0, responder, *k).map(|mut s| {
                    s.source_path = windows[*i].0.nodes.clone();
                    s
                })
            })
            .collect();
        let neighbor: Vec<_> = neighbor_jobs
            .par_iter()
            .zip(neighbor_idx)
            .map(|((p, e), k)| neighbor_qa(graph, p, e, responder, *k))
            .collect();
        (forget, neighbor)
    });
    let forget: Vec<_> = forget.into_iter().filter_map(|r| tally(&mut report, r, "forget QA")).collect();
    let neighbor: Vec<_> = neighbor.into_iter().filter_map(|r| tally(&mut report, r, "neighbor QA")).collect();

    let (forget, d1) = dedup_samples(forget);
    let (neighbor, d2) = dedup_samples(neighbor);
    report.duplicates_removed = d1 + d2;
    report.forget_samples = forget.len();
    report.neighbor_samples = neighbor.len();
    Datasets { forget, neighbor, report }
}

/// Seeded subset whose fraction of correct samples is within one sample of
/// `ratio`, as large as the label counts allow. `ratio` 0 and 1 select
/// exactly the incorrect or correct samples. Original order is kept.
pub fn mix_forget_set(
    samples: &[SupervisionSample],
    correct: &[bool],
    ratio: f64,
    seed: u64,
) -> Result<Vec<SupervisionSample>, SynthError> {
    if samples.len() != correct.len() {
        return Err(SynthError::Precondition("labels do not align with samples".into()));
    }
    let pos: Vec<usize> = (0..samples.len()).filter(|&i| correct[i]).collect();
    let neg: Vec<usize> = (0..samples.len()).filter(|&i| !correct[i]).collect();
    let infeasible = || SynthError::InfeasibleRatio { ratio, correct: pos.len(), incorrect: neg.len() };
    if !(0.0..=1.0).contains(&ratio) {
        return Err(infeasible());
    }
    let (c, i) = if ratio == 1.0 {
        (pos.len(), 0)
    } else if ratio == 0.0 {
        (0, neg.len())
    } else {
        if pos.is_empty() || neg.is_empty() {
            return Err(infeasible());
        }
        (2..=pos.len() + neg.len())
            .rev()
            .find_map(|n| {
                let lo = n.saturating_sub(neg.len());
                let c = ((ratio * n as f64).round() as usize).clamp(lo, pos.len().min(n));
                ((c as f64 / n as f64 - ratio).abs() <= 1.0 / n as f64 ).then_some((c, n - c))
            })
            .ok_or_else(infeasible)?
    };
    if c + i == 0 {
        return Err(infeasible());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, pos.len(), c).into_iter().map(|j| pos[j]).collect();
    chosen.extend(sample(&mut rng, neg.len(), i).into_iter().map(|j| neg[j]));
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|j| samples[j].clone()).collect())
}

/// Writes one JSON object per line; an empty list writes nothing.
pub fn emit_dataset<W: Write>(mut out: W, samples: &[SupervisionSample]) -> std::io::Result<u64> {
    let mut buf = Vec::new();
    for s in samples {
        serde_json::to_writer(&mut buf, s)?;
        buf.push(b'\n');
    }
    out.write_all(&buf)?;
    Ok(buf.len() as u64)
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<SupervisionSample>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let err = |message: String| SynthError::Parse { line: i + 1, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| err(e.to_string()))?);
        }
    }
    Ok(out)
}

/// Occurrences of each `(u, v)` pair across forget paths.
pub fn pair_frequencies(paths: &[MemoryPath]) -> BTreeMap<(EntityId, EntityId), u64> {
    let mut out = BTreeMap::new();
    for p in paths.iter().filter(|p| p.kind == PathKind::Forget) {
        for (u, v) in p.pairs() {
            *out.entry((u.clone(), v.clone())).or_insert(0) += 1;
        }
    }
    out
}
