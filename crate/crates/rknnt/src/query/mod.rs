//! The filter-and-refine pipeline for reverse-k-nearest-neighbor queries
//! over transitions.
//!
//! Three phases:
//!
//! 1. **Filter** walks the stop index best-first from the query.  Stops pop
//!    in ascending distance and are *harvested* — kept with their crossover
//!    sets as filtering evidence.  Each node pops before expansion: if the
//!    evidence already certifies that `k` routes beat the query everywhere
//!    in the node's box, the subtree is set aside for refinement instead of
//!    being opened.
//! 2. **Prune** walks the endpoint index with the same certificate: boxes
//!    (and finally individual endpoints) where `k` routes provably beat the
//!    query are discarded; surviving endpoints become candidates.
//! 3. **Refine** counts, per candidate, the routes strictly closer than the
//!    query — exactly.  Harvested stops are compared directly; each subtree
//!    set aside in phase one is counted through its box bounds, descending
//!    only while the bounds straddle the candidate's query distance.  Every
//!    stop is either harvested or beneath exactly one such subtree, so no
//!    route is missed or double-counted.
//!
//! All comparisons are between squared distances, strict in the query's
//! favor on ties, mirroring the brute-force oracle bit for bit.

pub mod methods;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::geometry::{
    filtering_space_contains, point_route_dist_sq, voronoi_filter, Extent, GeoPoint,
};
use crate::index::{NodeKind, RrTree, Scanned, TrTree};
use crate::model::{
    assemble_result, EndpointRef, QueryRoute, RknntResult, RouteId, Semantics, TransitionPointRef,
};

/// Pipeline switches.  The defaults are the full algorithm.
#[derive(Clone, Debug)]
pub struct QueryOptions {
    /// Apply the stop-set coverage test (phase-two filtering): routes whose
    /// individual stops certify nothing may still cover a box jointly.
    /// Turning this off weakens filtering only — answers never change.
    pub voronoi: bool,
    /// Evaluate as if this route did not exist.  Useful when the query is a
    /// rework of an existing route and competing against itself would be
    /// meaningless.
    pub masked_route: Option<RouteId>,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { voronoi: true, masked_route: None }
    }
}

/// Timing and volume counters for one query run.
#[derive(Clone, Debug, Default)]
pub struct QueryStats {
    pub wall_ms: f64,
    pub filter_ms: f64,
    pub refine_ms: f64,
    /// Stops harvested as filtering evidence.
    pub filter_points: usize,
    /// Stop-index subtrees set aside for refinement.
    pub refine_nodes: usize,
    /// Endpoints surviving the prune phase.
    pub candidates: usize,
    /// Transitions in the final result.
    pub result_size: usize,
}

/// A harvested stop: its location and the routes calling there (already
/// stripped of any masked route, never empty).
#[derive(Clone, Debug)]
struct FilterPoint {
    location: GeoPoint,
    routes: Vec<RouteId>,
}

/// Filtering evidence accumulated during the stop-index walk.
#[derive(Debug, Default)]
pub(crate) struct FilterSet {
    points: Vec<FilterPoint>,
    by_route: BTreeMap<RouteId, Vec<GeoPoint>>,
}

impl FilterSet {
    fn add(&mut self, location: GeoPoint, routes: Vec<RouteId>) {
        for &r in &routes {
            self.by_route.entry(r).or_default().push(location);
        }
        self.points.push(FilterPoint { location, routes });
    }

    pub(crate) fn len(&self) -> usize {
        self.points.len()
    }

    /// Do at least `k` distinct routes provably beat the query everywhere
    /// in `extent`?  Pass one: each harvested stop whose filtering space
    /// covers the extent certifies its crossover routes.  Pass two (when
    /// `voronoi` is on): a route not yet certified may still cover the
    /// extent with its harvested stops jointly.  Scan order cannot change
    /// the outcome — certificates only accumulate — so both passes exit as
    /// soon as `k` routes are certain.
    pub(crate) fn is_filtered(
        &self,
        query: &[GeoPoint],
        extent: &Extent,
        k: u32,
        voronoi: bool,
    ) -> bool {
        let k = k as usize;
        if k == 0 {
            return true;
        }
        let mut certified: BTreeSet<RouteId> = BTreeSet::new();
        for fp in &self.points {
            if fp.routes.iter().all(|r| certified.contains(r)) {
                continue;
            }
            if filtering_space_contains(&fp.location, query, extent) {
                certified.extend(fp.routes.iter().copied());
                if certified.len() >= k {
                    return true;
                }
            }
        }
        if voronoi {
            for (route, stops) in &self.by_route {
                if certified.contains(route) {
                    continue;
                }
                if voronoi_filter(stops, query, extent) {
                    certified.insert(*route);
                    if certified.len() >= k {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Strip the masked route from a crossover set.
fn unmasked(routes: &[RouteId], opts: &QueryOptions) -> Vec<RouteId> {
    match opts.masked_route {
        None => routes.to_vec(),
        Some(m) => routes.iter().copied().filter(|&r| r != m).collect(),
    }
}

/// Phase one: harvest stops near the query and set aside certified
/// subtrees.  Returns the evidence and the ids of the deferred nodes.
pub(crate) fn filter_route(
    rr: &RrTree,
    query: &[GeoPoint],
    k: u32,
    opts: &QueryOptions,
) -> (FilterSet, Vec<usize>) {
    let mut fs = FilterSet::default();
    let mut deferred = Vec::new();
    let mut cursor = rr.tree().best_first(query);
    while let Some(item) = cursor.next() {
        match item {
            Scanned::Entry { entry, .. } => {
                let routes = unmasked(&entry.routes, opts);
                if !routes.is_empty() {
                    fs.add(entry.location, routes);
                }
            }
            Scanned::Node { id, .. } => {
                let extent = Extent::Box(rr.tree().node(id).mbr);
                if fs.is_filtered(query, &extent, k, opts.voronoi) {
                    deferred.push(id);
                } else {
                    cursor.expand(id);
                }
            }
        }
    }
    (fs, deferred)
}

/// Phase two: walk the endpoint index, dropping certified boxes and
/// endpoints; survivors are the candidates.
pub(crate) fn prune_transitions(
    tr: &TrTree,
    fs: &FilterSet,
    query: &[GeoPoint],
    k: u32,
    opts: &QueryOptions,
) -> Vec<TransitionPointRef> {
    let mut out = Vec::new();
    let Some(root) = tr.tree().root() else { return out };
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        let node = tr.tree().node(id);
        if fs.is_filtered(query, &Extent::Box(node.mbr), k, opts.voronoi) {
            continue;
        }
        match &node.kind {
            NodeKind::Leaf(endpoints) => {
                for e in endpoints {
                    if !fs.is_filtered(query, &Extent::Point(e.location), k, opts.voronoi) {
                        out.push(*e);
                    }
                }
            }
            NodeKind::Inner(children) => stack.extend(children.iter().rev()),
        }
    }
    out
}

/// Phase three: does the endpoint at `p` really keep the query among its
/// `k` nearest routes?  Exact count of strictly-closer routes, combining
/// harvested stops with the deferred subtrees.
fn qualifies(
    rr: &RrTree,
    fs: &FilterSet,
    deferred: &[usize],
    p: &GeoPoint,
    query: &[GeoPoint],
    k: u32,
    opts: &QueryOptions,
) -> bool {
    let k = k as usize;
    if k == 0 {
        return false;
    }
    let d_q = point_route_dist_sq(p, query);
    let mut closer: BTreeSet<RouteId> = BTreeSet::new();

    for fp in &fs.points {
        if p.dist_sq(&fp.location) < d_q {
            closer.extend(fp.routes.iter().copied());
            if closer.len() >= k {
                return false;
            }
        }
    }

    let mut stack = deferred.to_vec();
    while let Some(id) = stack.pop() {
        let node = rr.tree().node(id);
        let counted_out = rr
            .nlist(id)
            .iter()
            .all(|r| Some(*r) == opts.masked_route || closer.contains(r));
        if counted_out {
            continue;
        }
        if node.mbr.min_dist_sq(p) >= d_q {
            // Nothing below can beat the query for this endpoint.
            continue;
        }
        if node.mbr.max_dist_sq(p) < d_q {
            // Everything below does: take the node's routes wholesale.
            closer.extend(unmasked(rr.nlist(id), opts));
            if closer.len() >= k {
                return false;
            }
            continue;
        }
        match &node.kind {
            NodeKind::Leaf(entries) => {
                for e in entries {
                    if p.dist_sq(&e.location) < d_q {
                        closer.extend(unmasked(&e.routes, opts));
                        if closer.len() >= k {
                            return false;
                        }
                    }
                }
            }
            NodeKind::Inner(children) => stack.extend(children),
        }
    }
    closer.len() < k
}

/// Phase three over all candidates: the qualifying endpoints.
pub(crate) fn refine_candidates(
    rr: &RrTree,
    fs: &FilterSet,
    deferred: &[usize],
    candidates: &[TransitionPointRef],
    query: &[GeoPoint],
    k: u32,
    opts: &QueryOptions,
) -> BTreeSet<EndpointRef> {
    candidates
        .iter()
        .filter(|c| qualifies(rr, fs, deferred, &c.location, query, k, opts))
        .map(|c| c.endpoint())
        .collect()
}

/// The full pipeline: filter, prune, refine, assemble.
pub fn rknnt(
    rr: &RrTree,
    tr: &TrTree,
    query: &QueryRoute,
    k: u32,
    semantics: Semantics,
    opts: &QueryOptions,
) -> (RknntResult, QueryStats) {
    let started = Instant::now();
    let q = query.points.as_slice();

    let filter_started = Instant::now();
    let (fs, deferred) = filter_route(rr, q, k, opts);
    let filter_ms = ms_since(filter_started);

    let refine_started = Instant::now();
    let candidates = prune_transitions(tr, &fs, q, k, opts);
    let hits = refine_candidates(rr, &fs, &deferred, &candidates, q, k, opts);
    let refine_ms = ms_since(refine_started);

    let result = assemble_result(&hits, semantics, k);
    let stats = QueryStats {
        wall_ms: ms_since(started),
        filter_ms,
        refine_ms,
        filter_points: fs.len(),
        refine_nodes: deferred.len(),
        candidates: candidates.len(),
        result_size: result.transitions.len(),
    };
    (result, stats)
}

/// The same answer by decomposition: each query stop runs as its own
/// single-stop query (in parallel) and the endpoint hits are unioned.
///
/// This is exact, not approximate.  An endpoint's distance to the query is
/// realized by some stop `q*`, and the single-stop query at `q*` applies
/// the identical comparison, so a hit for the whole query is a hit for
/// `q*`.  Conversely a single-stop query only sees distances no smaller
/// than the whole query's, so its hits are hits for the whole query too.
pub fn rknnt_divide_conquer(
    rr: &RrTree,
    tr: &TrTree,
    query: &QueryRoute,
    k: u32,
    semantics: Semantics,
    opts: &QueryOptions,
) -> (RknntResult, QueryStats) {
    use rayon::prelude::*;

    let started = Instant::now();

    let filter_started = Instant::now();
    let per_stop: Vec<(BTreeSet<EndpointRef>, usize, usize, usize)> = query
        .points
        .par_iter()
        .map(|stop| {
            let q = std::slice::from_ref(stop);
            let (fs, deferred) = filter_route(rr, q, k, opts);
            let candidates = prune_transitions(tr, &fs, q, k, opts);
            let hits = refine_candidates(rr, &fs, &deferred, &candidates, q, k, opts);
            (hits, fs.len(), deferred.len(), candidates.len())
        })
        .collect();
    let filter_ms = ms_since(filter_started);

    let refine_started = Instant::now();
    let mut hits = BTreeSet::new();
    let (mut filter_points, mut refine_nodes, mut candidates) = (0, 0, 0);
    for (h, fp, rn, ca) in per_stop {
        hits.extend(h);
        filter_points += fp;
        refine_nodes += rn;
        candidates += ca;
    }
    let result = assemble_result(&hits, semantics, k);
    let refine_ms = ms_since(refine_started);

    let stats = QueryStats {
        wall_ms: ms_since(started),
        filter_ms,
        refine_ms,
        filter_points,
        refine_nodes,
        candidates,
        result_size: result.transitions.len(),
    };
    (result, stats)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
