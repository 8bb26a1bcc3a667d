//! C ABI for `unlearnkit`.
//!
//! Graphs and oracle responders cross the boundary as opaque handles; all
//! other data is exchanged as NUL-terminated UTF-8 JSON or JSONL. Every
//! fallible call returns a [`UkStatus`], and on failure a message is
//! available from [`uk_last_error`] on the same thread. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`uk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use unlearnkit::elicit::{expand_graph, ElicitError, MiningConfig};
use unlearnkit::memgraph::{deserialize_graph, serialize_graph, MemoryGraph};
use unlearnkit::metrics::{compare_graphs, rouge_l_recall};
use unlearnkit::oracle::{OracleResponder, OracleWorld};
use unlearnkit::sampler::{
    read_paths_jsonl, sample_neighbor_paths, sample_paths, write_paths_jsonl, PathKind, SamplerError,
    SamplingConfig,
};
use unlearnkit::synth::{build_datasets, emit_dataset};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UkStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Responder = 4,
    Invariant = 5,
    Panic = 6,
}

/// A mined or loaded memory graph.
pub struct UkGraph(MemoryGraph);

/// A synthetic responder backed by a ground-truth world.
pub struct UkOracle(OracleResponder);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(UkStatus, String);

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Failure(UkStatus::InvalidInput, e.to_string())
    }
}

fn set_error(message: Option<String>) {
    let c = message.map(|m| CString::new(m.replace('\0', " ")).expect("NUL removed"));
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(None);
            UkStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(Some(message));
            status
        }
        Err(_) => {
            set_error(Some("internal panic".into()));
            UkStatus::Panic
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Failure(UkStatus::InvalidUtf8, "argument is not valid UTF-8".into()))
}

unsafe fn req_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    opt_str(p)?.ok_or_else(|| Failure(UkStatus::NullArgument, format!("`{name}` is NULL")))
}

unsafe fn req_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(UkStatus::NullArgument, format!("`{name}` is NULL")))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(UkStatus::NullArgument, format!("`{name}` is NULL")))
    } else {
        Ok(())
    }
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).expect("JSON output has no NUL").into_raw()
}

unsafe fn json_or_default<T: serde::de::DeserializeOwned + Default>(p: *const c_char) -> Result<T, Failure> {
    match opt_str(p)? {
        None => Ok(T::default()),
        Some(s) => serde_json::from_str(s).map_err(Failure::input),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn uk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn uk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an oracle responder from a world description in JSON.
///
/// # Safety
/// `world_json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uk_oracle_new(world_json: *const c_char, out: *mut *mut UkOracle) -> UkStatus {
    guard(|| {
        check_out(out, "out")?;
        let world = OracleWorld::from_json(req_str(world_json, "world_json")?.as_bytes()).map_err(Failure::input)?;
        let oracle = OracleResponder::new(world).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(UkOracle(oracle)));
        Ok(())
    })
}

/// # Safety
/// `oracle` must be NULL or a handle from [`uk_oracle_new`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uk_oracle_free(oracle: *mut UkOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Mines the memory graph of `target` against an oracle. `mining_json` and
/// `description` may be NULL; `parallelism` 0 means 1.
///
/// # Safety
/// Pointers must be valid for the duration of the call; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uk_mine(
    oracle: *const UkOracle,
    target: *const c_char,
    description: *const c_char,
    mining_json: *const c_char,
    parallelism: usize,
    out: *mut *mut UkGraph,
) -> UkStatus {
    guard(|| {
        check_out(out, "out")?;
        let oracle = req_ref(oracle, "oracle")?;
        let target = req_str(target, "target")?;
        let description = opt_str(description)?;
        let config: MiningConfig = json_or_default(mining_json)?;
        let outcome = expand_graph(&config, target, description, &oracle.0, parallelism).map_err(|e| match e {
            ElicitError::Responder { .. } => Failure(UkStatus::Responder, e.to_string()),
            ElicitError::Graph(_) => Failure(UkStatus::Invariant, e.to_string()),
            _ => Failure::input(e),
        })?;
        *out = Box::into_raw(Box::new(UkGraph(outcome.graph)));
        Ok(())
    })
}

/// Parses and validates a graph document.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uk_graph_from_json(json: *const c_char, out: *mut *mut UkGraph) -> UkStatus {
    guard(|| {
        check_out(out, "out")?;
        let graph = deserialize_graph(req_str(json, "json")?.as_bytes()).map_err(Failure::input)?;
        *out = Box::into_raw(Box::new(UkGraph(graph)));
        Ok(())
    })
}

/// Canonical JSON for a graph; free with [`uk_string_free`].
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uk_graph_to_json(graph: *const UkGraph, out: *mut *mut c_char) -> UkStatus {
    guard(|| {
        check_out(out, "out")?;
        let bytes = serialize_graph(&req_ref(graph, "graph")?.0);
        *out = to_c(String::from_utf8(bytes).expect("JSON is UTF-8"));
        Ok(())
    })
}

/// Number of nodes, target included; 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uk_graph_node_count(graph: *const UkGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.nodes.len())
}

/// Number of edges; 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn uk_graph_edge_count(graph: *const UkGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.edges.len())
}

/// # Safety
/// `graph` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uk_graph_free(graph: *mut UkGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Samples forget paths, then neighbor paths, and returns both as JSONL.
/// `sampling_json` may be NULL; `out_coverage` may be NULL.
///
/// # Safety
/// `graph` must be a live handle; `out_jsonl` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uk_sample_paths(
    graph: *const UkGraph,
    sampling_json: *const c_char,
    out_jsonl: *mut *mut c_char,
    out_coverage: *mut f64,
) -> UkStatus {
    guard(|| {
        check_out(out_jsonl, "out_jsonl")?;
        let graph = &req_ref(graph, "graph")?.0;
        let config: SamplingConfig = json_or_default(sampling_json)?;
        let sampler_failure = |e: SamplerError| match e {
            SamplerError::InvalidConfig(_) => Failure::input(e),
            _ => Failure(UkStatus::Invariant, e.to_string()),
        };
        let forget = sample_paths(graph, &config).map_err(sampler_failure)?;
        let neighbor = match sample_neighbor_paths(graph, &config) {
            Ok(p) => p,
            Err(SamplerError::NoNeighbors) => Vec::new(),
            Err(e) => return Err(sampler_failure(e)),
        };
        let mut buf = Vec::new();
        write_paths_jsonl(&mut buf, &forget.paths).expect("in-memory write");
        write_paths_jsonl(&mut buf, &neighbor).expect("in-memory write");
        if !out_coverage.is_null() {
            *out_coverage = forget.coverage;
        }
        *out_jsonl = to_c(String::from_utf8(buf).expect("JSON is UTF-8"));
        Ok(())
    })
}

/// Builds forget and neighbor datasets (JSONL) from sampled paths.
///
/// # Safety
/// Handles must be live; `paths_jsonl` a valid C string; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn uk_synthesize(
    graph: *const UkGraph,
    oracle: *const UkOracle,
    paths_jsonl: *const c_char,
    parallelism: usize,
    out_forget: *mut *mut c_char,
    out_neighbor: *mut *mut c_char,
) -> UkStatus {
    guard(|| {
        check_out(out_forget, "out_forget")?;
        check_out(out_neighbor, "out_neighbor")?;
        let graph = &req_ref(graph, "graph")?.0;
        let oracle = &req_ref(oracle, "oracle")?.0;
        let paths = read_paths_jsonl(req_str(paths_jsonl, "paths_jsonl")?.as_bytes()).map_err(Failure::input)?;
        let (forget, neighbor): (Vec<_>, Vec<_>) = paths.into_iter().partition(|p| p.kind == PathKind::Forget);
        let data = build_datasets(graph, &forget, &neighbor, oracle, parallelism);
        let emit = |samples| {
            let mut buf = Vec::new();
            emit_dataset(&mut buf, samples).expect("in-memory write");
            to_c(String::from_utf8(buf).expect("JSON is UTF-8"))
        };
        *out_forget = emit(&data.forget);
        *out_neighbor = emit(&data.neighbor);
        Ok(())
    })
}

/// Top-50 Jaccard and frequency cosine between two graphs.
///
/// # Safety
/// Handles must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn uk_compare_graphs(
    a: *const UkGraph,
    b: *const UkGraph,
    out_jaccard: *mut f64,
    out_cosine: *mut f64,
) -> UkStatus {
    guard(|| {
        check_out(out_jaccard, "out_jaccard")?;
        check_out(out_cosine, "out_cosine")?;
        let c = compare_graphs(&req_ref(a, "a")?.0, &req_ref(b, "b")?.0).map_err(Failure::input)?;
        *out_jaccard = c.jaccard_top50;
        *out_cosine = c.freq_cosine;
        Ok(())
    })
}

/// ROUGE-L recall of `candidate` against `reference`.
///
/// # Safety
/// Strings must be valid C strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uk_rouge_l_recall(
    candidate: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> UkStatus {
    guard(|| {
        check_out(out, "out")?;
        let r = rouge_l_recall(req_str(candidate, "candidate")?, req_str(reference, "reference")?)
            .map_err(Failure::input)?;
        *out = r;
        Ok(())
    })
}
