//! Corpus-free unlearning supervision.
//!
//! Starting from an entity name and any [`Responder`](elicit::Responder), the
//! crate mines a strength-weighted local memory graph around the entity,
//! samples high-salience paths through it, and turns adjacent path pairs into
//! scoped forget and neighbor QA datasets. [`oracle`] provides a seeded
//! synthetic responder with known ground truth so every stage can be checked.

pub mod config;
pub mod elicit;
pub mod memgraph;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod sampler;
pub mod synth;
pub mod text;

pub use elicit::{expand_graph, MiningConfig, Responder, ResponderError};
pub use memgraph::{normalize_mention, EntityId, MemoryGraph};

pub(crate) fn thread_pool(parallelism: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("failed to start worker pool")
}
