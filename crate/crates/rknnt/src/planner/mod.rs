//! Transit network model and route planning.
//!
//! A [`TransitGraph`] is an undirected weighted graph of stops; edge weights
//! are planar distances in kilometres.  On top of it the planner answers:
//! given an origin, a destination, and a travel-distance budget, which stop
//! sequence attracts the most (or fewest) transitions, where per-stop
//! attraction comes from reverse-kNN queries precomputed for every vertex.

pub mod methods;
mod precompute;
mod search;

pub use precompute::{all_pairs, precompute};
pub use search::{
    check_dominance, check_reachability, plan, DominancePolicy, DominanceTable, Label,
    PlanOptions, PlanStats, ReachabilityBound,
};

use std::collections::HashMap;

use crate::geometry::{GeoPoint, PointKey};
use crate::model::{EndpointRef, EndpointKind, Route, Semantics, TransitionId};
use crate::Error;

/// Vertices are dense indices into the graph's vertex table.
pub type VertexId = u32;

/// An undirected, positively weighted graph of transit stops.
#[derive(Clone, Debug)]
pub struct TransitGraph {
    locations: Vec<GeoPoint>,
    /// Per-vertex neighbor list, sorted by neighbor id.
    adj: Vec<Vec<(VertexId, f64)>>,
    edge_count: usize,
}

impl TransitGraph {
    /// Build a graph from explicit vertex locations and undirected edges.
    /// Edge weights must be positive and finite; self-loops and duplicate
    /// edges are rejected.
    pub fn from_parts(
        locations: Vec<GeoPoint>,
        edges: &[(VertexId, VertexId, f64)],
    ) -> Result<Self, Error> {
        let n = locations.len();
        let mut adj = vec![Vec::new(); n];
        let mut seen = HashMap::new();
        for &(u, v, w) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::UnknownVertex(u.max(v)));
            }
            if u == v {
                return Err(Error::BadEdge(format!("self-loop at vertex {u}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::BadEdge(format!("edge {u}-{v} has weight {w}")));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key, w).is_some() {
                return Err(Error::BadEdge(format!("duplicate edge {u}-{v}")));
            }
            adj[u as usize].push((v, w));
            adj[v as usize].push((u, w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(TransitGraph { locations, adj, edge_count: edges.len() })
    }

    pub fn vertex_count(&self) -> usize {
        self.locations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn location(&self, v: VertexId) -> GeoPoint {
        self.locations[v as usize]
    }

    pub fn locations(&self) -> &[GeoPoint] {
        &self.locations
    }

    /// Neighbors of `v` with edge weights, ordered by vertex id.
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adj[v as usize]
    }

    /// The weight of edge `u`-`v`, if present.
    pub fn edge_weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.adj[u as usize]
            .binary_search_by_key(&v, |&(x, _)| x)
            .ok()
            .map(|i| self.adj[u as usize][i].1)
    }

    /// The vertex nearest to `p` (ties broken toward the smaller id).
    /// Returns `None` on an empty graph.
    pub fn nearest_vertex(&self, p: &GeoPoint) -> Option<VertexId> {
        let mut best: Option<(f64, VertexId)> = None;
        for (i, loc) in self.locations.iter().enumerate() {
            let d = p.dist_sq(loc);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i as VertexId));
            }
        }
        best.map(|(_, v)| v)
    }
}

/// Derive the stop graph from a route set: vertices are stops deduplicated
/// by exact coordinates (first-seen order), edges connect consecutive stops
/// of any route, weighted by planar distance.  Two routes sharing a leg
/// contribute one edge.
pub fn build_graph(routes: &[Route]) -> Result<TransitGraph, Error> {
    let mut locations: Vec<GeoPoint> = Vec::new();
    let mut by_key: HashMap<PointKey, VertexId> = HashMap::new();
    let mut vertex_of = |p: &GeoPoint, locations: &mut Vec<GeoPoint>| -> VertexId {
        *by_key.entry(PointKey::of(p)).or_insert_with(|| {
            locations.push(*p);
            (locations.len() - 1) as VertexId
        })
    };

    let mut edges: Vec<(VertexId, VertexId, f64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for route in routes {
        for pair in route.points.windows(2) {
            let u = vertex_of(&pair[0], &mut locations);
            let v = vertex_of(&pair[1], &mut locations);
            if u == v {
                // Consecutive duplicate stops carry no movement.
                continue;
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                edges.push((u, v, pair[0].dist(&pair[1])));
            }
        }
    }
    TransitGraph::from_parts(locations, &edges)
}

/// Total travel distance of a stop sequence: the sum of its edge weights,
/// accumulated front to back.
///
/// # Panics
///
/// Panics on an empty path ("empty path").
pub fn travel_distance(graph: &TransitGraph, path: &[VertexId]) -> Result<f64, Error> {
    assert!(!path.is_empty(), "empty path");
    let mut td = 0.0;
    for pair in path.windows(2) {
        match graph.edge_weight(pair[0], pair[1]) {
            Some(w) => td += w,
            None => {
                return Err(Error::BadEdge(format!(
                    "vertices {} and {} are not adjacent",
                    pair[0], pair[1]
                )))
            }
        }
    }
    Ok(td)
}

/// A dense all-pair distance matrix with `+inf` marking unreachable pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DistMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        DistMatrix { n, data: vec![value; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: VertexId, j: VertexId) -> f64 {
        self.data[i as usize * self.n + j as usize]
    }

    pub fn set(&mut self, i: VertexId, j: VertexId, value: f64) {
        self.data[i as usize * self.n + j as usize] = value;
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n);
        DistMatrix { n, data }
    }
}

/// All-pair shortest path distances by Floyd–Warshall.  Cubic in the vertex
/// count; right for the network sizes the planner precomputes for.  Larger
/// graphs fall back to repeated single-source runs (see
/// [`sssp_distances`]), which computes the same values.
pub fn floyd_warshall(graph: &TransitGraph) -> DistMatrix {
    let n = graph.vertex_count();
    let mut m = DistMatrix::filled(n, f64::INFINITY);
    for v in 0..n {
        m.set(v as VertexId, v as VertexId, 0.0);
        for &(u, w) in graph.neighbors(v as VertexId) {
            m.set(v as VertexId, u, w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = m.get(i as VertexId, k as VertexId);
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let through = dik + m.get(k as VertexId, j as VertexId);
                if through < m.get(i as VertexId, j as VertexId) {
                    m.set(i as VertexId, j as VertexId, through);
                }
            }
        }
    }
    m
}

/// Single-source shortest path distances (binary-heap Dijkstra).
pub fn sssp_distances(graph: &TransitGraph, source: VertexId) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = graph.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(Reverse((HeapFloat(0.0), source)));
    while let Some(Reverse((HeapFloat(d), v))) = heap.pop() {
        if d > dist[v as usize] {
            continue;
        }
        for &(u, w) in graph.neighbors(v) {
            let nd = d + w;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(Reverse((HeapFloat(nd), u)));
            }
        }
    }
    dist
}

/// A finite float that is `Ord`, for use as a heap priority.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct HeapFloat(pub f64);

impl Eq for HeapFloat {}

impl PartialOrd for HeapFloat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapFloat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A sorted, deduplicated set of transition endpoints.  This is the `omega`
/// accumulated along a planned route: every endpoint that would adopt some
/// stop of the route as a k-nearest neighbour.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EndpointSet {
    items: Vec<EndpointRef>,
}

impl EndpointSet {
    pub fn new() -> Self {
        EndpointSet::default()
    }

    pub fn from_refs<I: IntoIterator<Item = EndpointRef>>(iter: I) -> Self {
        let mut items: Vec<EndpointRef> = iter.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        EndpointSet { items }
    }

    pub fn insert(&mut self, e: EndpointRef) {
        if let Err(pos) = self.items.binary_search(&e) {
            self.items.insert(pos, e);
        }
    }

    /// Merge of two sorted sets.
    pub fn union(&self, other: &EndpointSet) -> EndpointSet {
        let (a, b) = (&self.items, &other.items);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        EndpointSet { items: out }
    }

    pub fn iter(&self) -> impl Iterator<Item = &EndpointRef> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Distinct transitions under the given semantics: any endpoint for
    /// `Exists`, both endpoints for `ForAll`.
    pub fn count(&self, semantics: Semantics) -> usize {
        match semantics {
            Semantics::Exists => {
                let mut n = 0;
                let mut last = None;
                for e in &self.items {
                    if last != Some(e.transition) {
                        n += 1;
                        last = Some(e.transition);
                    }
                }
                n
            }
            Semantics::ForAll => {
                // Sorted order puts a transition's origin right before its
                // destination, so pairs are adjacent.
                self.items
                    .windows(2)
                    .filter(|w| {
                        w[0].transition == w[1].transition
                            && w[0].kind == EndpointKind::Origin
                            && w[1].kind == EndpointKind::Destination
                    })
                    .count()
            }
        }
    }

    /// The qualifying transition ids under the given semantics.
    pub fn ids(&self, semantics: Semantics) -> std::collections::BTreeSet<TransitionId> {
        match semantics {
            Semantics::Exists => self.items.iter().map(|e| e.transition).collect(),
            Semantics::ForAll => self
                .items
                .windows(2)
                .filter(|w| {
                    w[0].transition == w[1].transition
                        && w[0].kind == EndpointKind::Origin
                        && w[1].kind == EndpointKind::Destination
                })
                .map(|w| w[0].transition)
                .collect(),
        }
    }
}

/// Whether the planner is maximizing or minimizing the number of attracted
/// transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Max,
    Min,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Max => "max",
            Objective::Min => "min",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Objective::Max),
            "min" => Ok(Objective::Min),
            other => Err(format!("unknown objective `{other}` (expected `max` or `min`)")),
        }
    }
}

/// A complete planned route: its stop sequence, travel distance, and the
/// endpoint set it attracts.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedRoute {
    pub vertices: Vec<VertexId>,
    pub td: f64,
    pub omega: EndpointSet,
}

impl PlannedRoute {
    pub fn count(&self, semantics: Semantics) -> usize {
        self.omega.count(semantics)
    }

    pub fn omega_ids(&self, semantics: Semantics) -> std::collections::BTreeSet<TransitionId> {
        self.omega.ids(semantics)
    }
}

/// Deterministic comparison of complete routes: a candidate improves on the
/// incumbent when its transition count is strictly better for the objective;
/// ties fall to the shorter travel distance, then to the lexicographically
/// smaller vertex sequence.  The planner and the brute-force baseline share
/// this function, so they agree on every tie.
pub fn is_improvement(
    cand: &PlannedRoute,
    incumbent: &PlannedRoute,
    objective: Objective,
    semantics: Semantics,
) -> bool {
    let (c, b) = (cand.count(semantics), incumbent.count(semantics));
    if c != b {
        return match objective {
            Objective::Max => c > b,
            Objective::Min => c < b,
        };
    }
    if cand.td != incumbent.td {
        return cand.td < incumbent.td;
    }
    cand.vertices < incumbent.vertices
}

/// Per-vertex reverse-kNN endpoint sets at a fixed `k`, plus the all-pair
/// shortest-distance matrix the planner prunes with.
#[derive(Clone, Debug, PartialEq)]
pub struct Precomputed {
    pub k: u32,
    pub sets: Vec<EndpointSet>,
    pub m_psi: DistMatrix,
}
