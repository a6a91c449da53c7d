//! Reverse-k-nearest-neighbor queries over commuter transitions, and
//! transit-route planning on top of them.
//!
//! The core question: given bus routes and a set of observed trips (each an
//! origin/destination pair), which trips would find a *query* route among
//! their `k` nearest route options?  Those trips are the query's potential
//! patronage.  The [`query`] module answers that with a two-tree
//! filter-and-refine pipeline; [`oracle`] answers it by brute force for
//! cross-checking; [`planner`] searches a road network for the route between
//! two terminals that maximizes (or minimizes) that patronage under a travel
//! distance budget.
//!
//! Geometry is planar: ingest projects geographic coordinates into a local
//! kilometer frame first ([`ingest`]).  Distance comparisons throughout use
//! squared distances, so the pipeline, the oracles, and the refinement step
//! agree bit-for-bit.

pub mod engine;
pub mod geometry;
pub mod index;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod query;

pub mod fixtures;

use thiserror::Error;

/// Everything that can go wrong between ingest and answers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(u32),

    #[error("bad edge: {0}")]
    BadEdge(String),

    #[error("travel distance budget must be positive and finite, got {0}")]
    BadBudget(f64),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("transition {0} is already indexed")]
    DuplicateTransition(model::TransitionId),

    #[error("transition {0} is not indexed")]
    UnknownTransition(model::TransitionId),

    #[error("route set is empty")]
    EmptyRoutes,

    #[error("unknown method {0:?}")]
    UnknownMethod(String),

    #[error("snapshot is not usable: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
