//! Per-vertex attraction sets and the all-pairs distance matrix.
//!
//! Planning consults two tables that depend only on the network and the
//! transition workload, not on any particular origin/destination pair, so
//! they are built once up front:
//!
//! * for every vertex, the set of transition endpoints that would pick a
//!   route through that stop over their current best alternative — a
//!   single-stop reverse-kNN query per vertex;
//! * the shortest travel distance between every pair of vertices, used both
//!   to prune unreachable extensions and to rank planned routes.
//!
//! Endpoint sets are computed under the one-endpoint-suffices reading; the
//! planner later tightens to both-endpoints when asked to.

use rayon::prelude::*;

use super::{floyd_warshall, sssp_distances, DistMatrix, Precomputed, TransitGraph, VertexId};
use crate::index::{RrTree, TrTree};
use crate::model::{QueryRoute, Semantics};
use crate::query::{rknnt, QueryOptions};
use crate::planner::EndpointSet;

/// Above this many vertices a Floyd–Warshall pass (Θ(n³)) loses to running
/// one Dijkstra per vertex over a sparse graph, and its working set stops
/// fitting in cache.
const SSSP_CUTOFF: usize = 1000;

/// Shortest travel distance between every pair of vertices.
///
/// Unreachable pairs are `f64::INFINITY`; the diagonal is zero.
pub fn all_pairs(graph: &TransitGraph) -> DistMatrix {
    let n = graph.vertex_count();
    if n <= SSSP_CUTOFF {
        return floyd_warshall(graph);
    }
    let rows: Vec<Vec<f64>> = (0..n as VertexId)
        .into_par_iter()
        .map(|v| sssp_distances(graph, v))
        .collect();
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        data.extend_from_slice(&row);
    }
    DistMatrix::from_raw(n, data)
}

/// Build everything [`super::plan`] needs: one reverse-kNN endpoint set per
/// vertex plus the all-pairs distance matrix.
///
/// The per-vertex queries are independent and run in parallel.
pub fn precompute(graph: &TransitGraph, rr: &RrTree, tr: &TrTree, k: u32) -> Precomputed {
    let sets: Vec<EndpointSet> = (0..graph.vertex_count() as VertexId)
        .into_par_iter()
        .map(|v| {
            let probe = QueryRoute::single(graph.location(v));
            let opts = QueryOptions::default();
            let (result, _) = rknnt(rr, tr, &probe, k, Semantics::Exists, &opts);
            EndpointSet::from_refs(result.endpoint_hits.iter().copied())
        })
        .collect();
    Precomputed { k, sets, m_psi: all_pairs(graph) }
}
