//! Subcommand implementations and artifact handling.
//!
//! Every command writes its artifacts into the output directory and merges
//! their SHA-256 digests into `manifest.json`. When an artifact already had a
//! digest there, the new one is compared against it and the outcome is
//! reported, so re-running a seeded command doubles as a determinism check.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::elicit::{expand_graph, ElicitError, RecordingResponder, Responder, TranscriptEntry};
use crate::memgraph::{deserialize_graph, serialize_graph, BudgetReport, MemoryGraph};
use crate::metrics::{compare_graphs, GraphComparison};
use crate::sampler::{
    read_paths_jsonl, sample_neighbor_paths, sample_paths, write_paths_jsonl, MemoryPath, PathKind,
    SamplerError, SamplingOutcome,
};
use crate::synth::{build_datasets, emit_dataset, Datasets};

pub const GRAPH_FILE: &str = "graph.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const SYNTH_TRANSCRIPT_FILE: &str = "synth_transcript.jsonl";
pub const BUDGET_FILE: &str = "budget.json";
pub const ELICITATIONS_FILE: &str = "elicitations.jsonl";
pub const PATHS_FILE: &str = "paths.jsonl";
pub const SAMPLING_FILE: &str = "sampling.json";
pub const FORGET_FILE: &str = "forget.jsonl";
pub const NEIGHBOR_FILE: &str = "neighbor.jsonl";
pub const SYNTH_REPORT_FILE: &str = "synth_report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Mean iterations per entity observed for knowledge-rich targets with a
/// large model; printed next to the run's own count for orientation.
pub const REFERENCE_ITERATIONS_PER_ENTITY: f64 = 88.36;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("responder failure: {0}")]
    Responder(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl PipelineError {
    /// 2 config, 3 responder, 4 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } => 2,
            PipelineError::Responder(_) => 3,
            PipelineError::Invariant(_) => 4,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

impl From<ElicitError> for PipelineError {
    fn from(e: ElicitError) -> Self {
        match e {
            ElicitError::Responder { .. } => PipelineError::Responder(e.to_string()),
            ElicitError::InvalidConfig(_) | ElicitError::EmptyTarget => {
                PipelineError::Config(ConfigError::Invalid(e.to_string()))
            }
            other => PipelineError::Invariant(other.to_string()),
        }
    }
}

impl From<SamplerError> for PipelineError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::InvalidConfig(_) => PipelineError::Config(ConfigError::Invalid(e.to_string())),
            other => PipelineError::Invariant(other.to_string()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: BTreeMap<String, String>,
}

/// How freshly written artifacts compare with the previous manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestCheck {
    pub unchanged: Vec<String>,
    pub changed: Vec<String>,
    pub new: Vec<String>,
}

impl ManifestCheck {
    pub fn is_consistent(&self) -> bool {
        self.changed.is_empty()
    }
}

/// Collects artifact writes for one command.
struct Artifacts {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), PipelineError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Merges the digests into the manifest and reports against the old one.
    fn finish(self) -> Result<(BTreeMap<String, String>, ManifestCheck), PipelineError> {
        let path = self.dir.join(MANIFEST_FILE);
        let mut manifest = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| PipelineError::io(&path, e))?,
            Err(_) => Manifest::default(),
        };
        let mut check = ManifestCheck::default();
        for (name, digest) in &self.written {
            match manifest.artifacts.insert(name.clone(), digest.clone()) {
                None => check.new.push(name.clone()),
                Some(old) if old == *digest => check.unchanged.push(name.clone()),
                Some(_) => check.changed.push(name.clone()),
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        if !check.changed.is_empty() {
            log::warn!("artifacts differ from the previous manifest: {:?}", check.changed);
        }
        Ok((self.written, check))
    }
}

/// Names of manifest entries whose file is missing or no longer matches.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest
        .artifacts
        .iter()
        .filter(|(name, digest)| fs::read(dir.join(name)).ok().map(|b| sha256_hex(&b)).as_ref() != Some(*digest))
        .map(|(name, _)| name.clone())
        .collect())
}

fn jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).expect("serializable");
        buf.push(b'\n');
    }
    buf
}

fn transcript_bytes(entries: &[TranscriptEntry]) -> Vec<u8> {
    jsonl(entries)
}

/// Budget figures written next to the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetSummary {
    #[serde(flatten)]
    pub budget: BudgetReport,
    pub within_bound: bool,
    pub reference_iterations_per_entity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSummary {
    pub walks: u32,
    pub forget_paths: usize,
    pub neighbor_paths: usize,
    pub coverage: f64,
    pub coverage_history: Vec<f64>,
    pub hit_cap: bool,
}

/// What a command did, printed as JSON by the binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub out_dir: PathBuf,
    pub artifacts: BTreeMap<String, String>,
    pub manifest_check: ManifestCheck,
    pub details: Value,
}

fn mine_into(
    cfg: &PipelineConfig,
    responder: &dyn Responder,
    target: &str,
    description: Option<&str>,
    out: &mut Artifacts,
) -> Result<(MemoryGraph, BudgetSummary), PipelineError> {
    let outcome = expand_graph(&cfg.mining, target, description, responder, cfg.parallelism)?;
    let budget = BudgetSummary {
        budget: outcome.graph.budget.clone(),
        within_bound: outcome.graph.budget.within_bound(),
        reference_iterations_per_entity: REFERENCE_ITERATIONS_PER_ENTITY,
    };
    if !budget.within_bound {
        return Err(PipelineError::Invariant("queries exceed N x iterations".into()));
    }
    out.write(GRAPH_FILE, &serialize_graph(&outcome.graph))?;
    out.write(ELICITATIONS_FILE, &jsonl(&outcome.records))?;
    out.write_json(BUDGET_FILE, &budget)?;
    Ok((outcome.graph, budget))
}

fn sample_into(
    cfg: &PipelineConfig,
    graph: &MemoryGraph,
    out: &mut Artifacts,
) -> Result<(SamplingOutcome, Vec<MemoryPath>, SamplingSummary), PipelineError> {
    let forget = sample_paths(graph, &cfg.sampling)?;
    let neighbor = match sample_neighbor_paths(graph, &cfg.sampling) {
        Ok(p) => p,
        Err(SamplerError::NoNeighbors) => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let summary = SamplingSummary {
        walks: forget.walks,
        forget_paths: forget.paths.len(),
        neighbor_paths: neighbor.len(),
        coverage: forget.coverage,
        coverage_history: forget.coverage_history.clone(),
        hit_cap: forget.hit_cap,
    };
    let mut bytes = Vec::new();
    write_paths_jsonl(&mut bytes, &forget.paths).expect("in-memory write");
    write_paths_jsonl(&mut bytes, &neighbor).expect("in-memory write");
    out.write(PATHS_FILE, &bytes)?;
    out.write_json(SAMPLING_FILE, &summary)?;
    Ok((forget, neighbor, summary))
}

fn synth_into(
    cfg: &PipelineConfig,
    graph: &MemoryGraph,
    paths: &[MemoryPath],
    responder: &dyn Responder,
    out: &mut Artifacts,
) -> Result<Datasets, PipelineError> {
    let (forget, neighbor): (Vec<MemoryPath>, Vec<MemoryPath>) =
        paths.iter().cloned().partition(|p| p.kind == PathKind::Forget);
    let data = build_datasets(graph, &forget, &neighbor, responder, cfg.parallelism);
    let mut f = Vec::new();
    emit_dataset(&mut f, &data.forget).expect("in-memory write");
    let mut n = Vec::new();
    emit_dataset(&mut n, &data.neighbor).expect("in-memory write");
    out.write(FORGET_FILE, &f)?;
    out.write(NEIGHBOR_FILE, &n)?;
    out.write_json(SYNTH_REPORT_FILE, &data.report)?;
    Ok(data)
}

fn out_dir(cfg: &PipelineConfig, out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf)
}

fn summary(command: &str, dir: PathBuf, artifacts: Artifacts, details: Value) -> Result<RunSummary, PipelineError> {
    let (artifacts, manifest_check) = artifacts.finish()?;
    Ok(RunSummary { command: command.into(), out_dir: dir, artifacts, manifest_check, details })
}

pub fn load_graph(path: &Path) -> Result<MemoryGraph, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    deserialize_graph(&bytes).map_err(|e| PipelineError::Invariant(format!("{}: {e}", path.display())))
}

pub fn load_paths(path: &Path) -> Result<Vec<MemoryPath>, PipelineError> {
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    read_paths_jsonl(std::io::BufReader::new(file)).map_err(|e| PipelineError::io(path, e))
}

/// Mines the graph: writes graph, elicitations, budget and transcript.
pub fn run_mine(
    cfg: &PipelineConfig,
    target: &str,
    description: Option<&str>,
    out: Option<&Path>,
) -> Result<RunSummary, PipelineError> {
    let dir = out_dir(cfg, out);
    let responder = RecordingResponder::new(cfg.build_responder()?);
    let mut artifacts = Artifacts::new(&dir)?;
    let (graph, budget) = mine_into(cfg, &responder, target, description, &mut artifacts)?;
    artifacts.write(TRANSCRIPT_FILE, &transcript_bytes(&responder.entries()))?;
    let details = json!({"nodes": graph.nodes.len(), "edges": graph.edges.len(), "budget": budget});
    summary("mine", dir, artifacts, details)
}

/// Samples forget and neighbor paths from a graph file.
pub fn run_sample(cfg: &PipelineConfig, graph_file: &Path, out: Option<&Path>) -> Result<RunSummary, PipelineError> {
    let dir = out_dir(cfg, out);
    let graph = load_graph(graph_file)?;
    let mut artifacts = Artifacts::new(&dir)?;
    let (_, _, s) = sample_into(cfg, &graph, &mut artifacts)?;
    summary("sample", dir, artifacts, serde_json::to_value(s).expect("serializable"))
}

/// Synthesizes the datasets from a graph file and a path file.
pub fn run_synth(
    cfg: &PipelineConfig,
    graph_file: &Path,
    paths_file: &Path,
    out: Option<&Path>,
) -> Result<RunSummary, PipelineError> {
    let dir = out_dir(cfg, out);
    let graph = load_graph(graph_file)?;
    let paths = load_paths(paths_file)?;
    let responder = RecordingResponder::new(cfg.build_responder()?);
    let mut artifacts = Artifacts::new(&dir)?;
    let data = synth_into(cfg, &graph, &paths, &responder, &mut artifacts)?;
    artifacts.write(SYNTH_TRANSCRIPT_FILE, &transcript_bytes(&responder.entries()))?;
    summary("synth", dir, artifacts, serde_json::to_value(&data.report).expect("serializable"))
}

/// Mine, sample and synthesize in one run. The transcript covers every
/// responder call, so a replay config pointing at it reproduces all files.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    target: &str,
    description: Option<&str>,
    out: Option<&Path>,
) -> Result<RunSummary, PipelineError> {
    let dir = out_dir(cfg, out);
    let responder = RecordingResponder::new(cfg.build_responder()?);
    let mut artifacts = Artifacts::new(&dir)?;
    let (graph, budget) = mine_into(cfg, &responder, target, description, &mut artifacts)?;
    let (forget, neighbor, sampling) = sample_into(cfg, &graph, &mut artifacts)?;
    let mut paths = forget.paths;
    paths.extend(neighbor);
    let data = synth_into(cfg, &graph, &paths, &responder, &mut artifacts)?;
    artifacts.write(TRANSCRIPT_FILE, &transcript_bytes(&responder.entries()))?;
    let details = json!({
        "nodes": graph.nodes.len(),
        "edges": graph.edges.len(),
        "budget": budget,
        "sampling": sampling,
        "synthesis": data.report,
    });
    summary("pipeline", dir, artifacts, details)
}

/// Top-50 Jaccard and frequency cosine between two graph files.
pub fn run_compare(a: &Path, b: &Path) -> Result<GraphComparison, PipelineError> {
    let (ga, gb) = (load_graph(a)?, load_graph(b)?);
    compare_graphs(&ga, &gb).map_err(|e| PipelineError::Invariant(format!("cannot compare graphs: {e}")))
}
