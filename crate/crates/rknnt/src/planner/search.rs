//! Best-first route search with reachability pruning, label dominance, and
//! (for the minimizing objective) incumbent bounds.
//!
//! Partial routes ("labels") are expanded in ascending travel distance.  An
//! extension survives only if the remaining budget still covers a lower
//! bound of the distance to the destination, and if no stored label at the
//! same vertex dominates it.  Completed routes compete through
//! [`is_improvement`], the same rule the brute-force baseline uses, so the
//! two agree on every tie of the reported objective values.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{
    is_improvement, DistMatrix, EndpointSet, HeapFloat, Objective, PlannedRoute, Precomputed,
    TransitGraph, VertexId,
};
use crate::model::Semantics;
use crate::Error;

/// Lower bound used when testing whether the destination is still in reach.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReachabilityBound {
    /// Exact shortest-path distances from the precomputed all-pair matrix.
    ShortestPath,
    /// Straight-line distance.  Weaker (edge weights are at least the
    /// straight-line distance between their endpoints), so it prunes less
    /// but never changes the result; exists to demonstrate exactly that.
    StraightLine,
}

/// How stored labels may suppress new ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominancePolicy {
    /// No dominance pruning at all.
    Off,
    /// Sound subsumption: a label dominates a candidate only when it reaches
    /// the same vertex no later (`td ≤`), with a lexicographically earlier
    /// stop sequence, through a subset of the candidate's vertices, with an
    /// endpoint set that loses nothing the candidate has.  Every
    /// continuation of the candidate is then available to the dominating
    /// label with an at-least-as-good outcome under the full preference
    /// order (count, travel distance, stop sequence), so pruning can never
    /// change the answer.  This is the default.
    Exact,
    /// The relaxed comparison: strictly smaller travel distance plus a
    /// both-endpoint count exceeding the candidate's any-endpoint count.
    /// Fires far more often, but may evict a label whose continuations were
    /// uniquely optimal (the dominating label can dead-end on the
    /// simple-path constraint, or the counts can be overtaken by overlap
    /// with later stops).  Opt-in, for speed over exactness.
    Aggressive,
}

/// Knobs for [`plan`].  `new` picks the sound defaults; the ablation flags
/// exist to show they only change running time, never answers.
#[derive(Clone, Debug)]
pub struct PlanOptions {
    pub objective: Objective,
    pub semantics: Semantics,
    pub dominance: DominancePolicy,
    pub reachability: ReachabilityBound,
    /// For `Min`: discard partial routes already attracting more transitions
    /// than the incumbent answer.
    pub use_bounds: bool,
}

impl PlanOptions {
    pub fn new(objective: Objective, semantics: Semantics) -> Self {
        PlanOptions {
            objective,
            semantics,
            dominance: DominancePolicy::Exact,
            reachability: ReachabilityBound::ShortestPath,
            use_bounds: true,
        }
    }
}

/// Counters describing one search run.
#[derive(Clone, Debug, Default)]
pub struct PlanStats {
    pub popped: usize,
    pub pushed: usize,
    pub dominated: usize,
    pub evicted: usize,
    pub bounded: usize,
    pub unreachable: usize,
    /// Per vertex: did any label ending there enter the queue?
    pub enqueued: Vec<bool>,
}

/// Is the destination still reachable within `budget` according to the
/// all-pair matrix?  Equality passes: a budget exactly covering the shortest
/// path is enough.
pub fn check_reachability(m_psi: &DistMatrix, v: VertexId, d: VertexId, budget: f64) -> bool {
    m_psi.get(v, d) <= budget
}

/// A partial route under construction.
#[derive(Clone, Debug)]
pub struct Label {
    pub vertices: Vec<VertexId>,
    pub td: f64,
    pub omega: EndpointSet,
    mask: VertexMask,
}

impl Label {
    pub fn start(v: VertexId, omega: EndpointSet, n_vertices: usize) -> Self {
        let mut mask = VertexMask::empty(n_vertices);
        mask.set(v);
        Label { vertices: vec![v], td: 0.0, omega, mask }
    }

    pub fn end(&self) -> VertexId {
        *self.vertices.last().expect("label is never empty")
    }

    pub fn visits(&self, v: VertexId) -> bool {
        self.mask.contains(v)
    }

    fn extend(&self, v: VertexId, weight: f64, sets: &[EndpointSet]) -> Label {
        let mut vertices = Vec::with_capacity(self.vertices.len() + 1);
        vertices.extend_from_slice(&self.vertices);
        vertices.push(v);
        let mut mask = self.mask.clone();
        mask.set(v);
        Label { vertices, td: self.td + weight, omega: self.omega.union(&sets[v as usize]), mask }
    }

    fn into_route(self) -> PlannedRoute {
        PlannedRoute { vertices: self.vertices, td: self.td, omega: self.omega }
    }
}

/// Fixed-width bitset over vertex ids.
#[derive(Clone, Debug)]
struct VertexMask {
    words: Vec<u64>,
}

impl VertexMask {
    fn empty(n: usize) -> Self {
        VertexMask { words: vec![0; n.div_ceil(64)] }
    }

    fn set(&mut self, v: VertexId) {
        self.words[v as usize / 64] |= 1 << (v as usize % 64);
    }

    fn contains(&self, v: VertexId) -> bool {
        self.words[v as usize / 64] & (1 << (v as usize % 64)) != 0
    }

    fn is_subset_of(&self, other: &VertexMask) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

/// Outcome of offering a candidate label to the dominance table.
#[derive(Debug)]
pub enum Admission {
    /// A stored label at the same vertex dominates the candidate.
    Dominated,
    /// The candidate was stored; `evicted` counts labels it displaced.
    Admitted { id: usize, evicted: usize },
}

/// Per-vertex skylines of live labels, plus the slab the queue indexes into.
/// Queue entries reference labels by id; evicting a label flips its liveness
/// and the queue skips it on pop.
pub struct DominanceTable {
    policy: DominancePolicy,
    objective: Objective,
    labels: Vec<(Label, bool)>,
    at_vertex: Vec<Vec<usize>>,
}

impl DominanceTable {
    pub fn new(n_vertices: usize, policy: DominancePolicy, objective: Objective) -> Self {
        DominanceTable {
            policy,
            objective,
            labels: Vec::new(),
            at_vertex: vec![Vec::new(); n_vertices],
        }
    }

    pub fn is_alive(&self, id: usize) -> bool {
        self.labels[id].1
    }

    pub fn label(&self, id: usize) -> &Label {
        &self.labels[id].0
    }

    /// Live labels stored at `v`.
    pub fn live_at(&self, v: VertexId) -> impl Iterator<Item = &Label> {
        self.at_vertex[v as usize].iter().filter_map(|&id| {
            let (label, alive) = &self.labels[id];
            alive.then_some(label)
        })
    }

    /// Does `a` dominate `b` under the configured policy?  Both must end at
    /// the same vertex; the caller guarantees that.
    fn dominates(&self, a: &Label, b: &Label) -> bool {
        match self.policy {
            DominancePolicy::Off => false,
            DominancePolicy::Exact => {
                // Sequence order carries through: both labels end at the
                // same vertex of simple paths, so neither sequence is a
                // prefix of the other, and appending any common
                // continuation leaves their first differing stop — hence
                // their lexicographic order — unchanged.  Requiring the
                // dominator to come first keeps pruning sound even when a
                // continuation ties on count and travel distance and the
                // answer falls to the sequence tie-break.
                a.td <= b.td
                    && a.vertices < b.vertices
                    && a.mask.is_subset_of(&b.mask)
                    && match self.objective {
                        // Maximizing: the dominator must not have given up
                        // any endpoint the candidate collected.  (With the
                        // vertex-subset condition this means equal sets.)
                        Objective::Max => a.omega == b.omega,
                        // Minimizing: fewer stops means no extra endpoints,
                        // which is exactly what Min wants.
                        Objective::Min => true,
                    }
            }
            DominancePolicy::Aggressive => match self.objective {
                Objective::Max => {
                    a.td < b.td
                        && a.omega.count(Semantics::ForAll) > b.omega.count(Semantics::Exists)
                }
                // The published direction for Min mirrors Max with the
                // roles swapped: the longer route with the smaller
                // both-endpoint guarantee suppresses the shorter one.
                Objective::Min => {
                    b.td < a.td
                        && b.omega.count(Semantics::ForAll) > a.omega.count(Semantics::Exists)
                }
            },
        }
    }

    /// Offer `cand` (ending at vertex `v`).  Either a live label dominates
    /// it, or it is stored and labels it dominates are evicted along with
    /// their queued entries.
    pub fn admit(&mut self, cand: Label) -> Admission {
        let v = cand.end() as usize;
        for &id in &self.at_vertex[v] {
            let (label, alive) = &self.labels[id];
            if *alive && self.dominates(label, &cand) {
                return Admission::Dominated;
            }
        }
        let mut evicted = 0;
        let ids = std::mem::take(&mut self.at_vertex[v]);
        let mut kept = Vec::with_capacity(ids.len() + 1);
        for id in ids {
            if !self.labels[id].1 {
                continue;
            }
            if self.dominates(&cand, &self.labels[id].0) {
                self.labels[id].1 = false;
                evicted += 1;
            } else {
                kept.push(id);
            }
        }
        let id = self.labels.len();
        self.labels.push((cand, true));
        kept.push(id);
        self.at_vertex[v] = kept;
        Admission::Admitted { id, evicted }
    }
}

/// Offer a candidate to the dominance table; see [`DominanceTable::admit`].
pub fn check_dominance(dt: &mut DominanceTable, cand: Label) -> Admission {
    dt.admit(cand)
}

/// Find the route from `o` to `d` with travel distance at most `tau` that
/// attracts the most (`Max`) or fewest (`Min`) transitions, counting them
/// under the requested semantics.  Returns `None` exactly when `d` is not
/// reachable within the budget; ties are resolved by shorter travel
/// distance, then lexicographically smaller stop sequence.
pub fn plan(
    graph: &TransitGraph,
    pre: &Precomputed,
    o: VertexId,
    d: VertexId,
    tau: f64,
    opts: &PlanOptions,
) -> Result<(Option<PlannedRoute>, PlanStats), Error> {
    let n = graph.vertex_count();
    if o as usize >= n || d as usize >= n {
        return Err(Error::UnknownVertex(o.max(d)));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::BadBudget(tau));
    }
    if pre.sets.len() != n || pre.m_psi.n() != n {
        return Err(Error::Mismatch(format!(
            "precomputation covers {} vertices, graph has {n}",
            pre.sets.len()
        )));
    }

    let bound = |v: VertexId, budget: f64| -> bool {
        match opts.reachability {
            ReachabilityBound::ShortestPath => check_reachability(&pre.m_psi, v, d, budget),
            ReachabilityBound::StraightLine => {
                graph.location(v).dist(&graph.location(d)) <= budget
            }
        }
    };

    let mut stats = PlanStats { enqueued: vec![false; n], ..PlanStats::default() };
    let mut incumbent: Option<PlannedRoute> = None;

    if !bound(o, tau) {
        return Ok((None, stats));
    }

    let mut dt = DominanceTable::new(n, opts.dominance, opts.objective);
    // Queue of (travel distance, insertion sequence, label id): ascending
    // distance, ties in insertion order, so runs are fully reproducible.
    let mut queue: BinaryHeap<Reverse<(HeapFloat, u64, usize)>> = BinaryHeap::new();
    let mut seq = 0u64;

    let root = Label::start(o, pre.sets[o as usize].clone(), n);
    if let Admission::Admitted { id, .. } = dt.admit(root) {
        queue.push(Reverse((HeapFloat(0.0), seq, id)));
        stats.pushed += 1;
        stats.enqueued[o as usize] = true;
    }

    while let Some(Reverse((_, _, id))) = queue.pop() {
        if !dt.is_alive(id) {
            continue;
        }
        stats.popped += 1;
        let label = dt.label(id).clone();

        if label.end() == d {
            // A completed route: no simple continuation can return to `d`,
            // so compete for the answer and stop expanding.
            let cand = label.into_route();
            let better = incumbent
                .as_ref()
                .is_none_or(|inc| is_improvement(&cand, inc, opts.objective, opts.semantics));
            if better {
                incumbent = Some(cand);
            }
            continue;
        }

        if opts.use_bounds && opts.objective == Objective::Min {
            if let Some(inc) = &incumbent {
                if label.omega.count(opts.semantics) > inc.count(opts.semantics) {
                    stats.bounded += 1;
                    continue;
                }
            }
        }

        for &(nb, w) in graph.neighbors(label.end()) {
            if label.visits(nb) {
                continue;
            }
            let td = label.td + w;
            if !bound(nb, tau - td) {
                stats.unreachable += 1;
                continue;
            }
            let cand = label.extend(nb, w, &pre.sets);
            if opts.use_bounds && opts.objective == Objective::Min {
                if let Some(inc) = &incumbent {
                    if cand.omega.count(opts.semantics) > inc.count(opts.semantics) {
                        stats.bounded += 1;
                        continue;
                    }
                }
            }
            match dt.admit(cand) {
                Admission::Dominated => stats.dominated += 1,
                Admission::Admitted { id, evicted } => {
                    stats.evicted += evicted;
                    stats.enqueued[nb as usize] = true;
                    stats.pushed += 1;
                    seq += 1;
                    queue.push(Reverse((HeapFloat(td), seq, id)));
                }
            }
        }
    }

    Ok((incumbent, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GeoPoint;
    use crate::model::EndpointKind::{Destination, Origin};
    use crate::model::{EndpointRef, TransitionId};

    fn er(id: u32, kind: crate::model::EndpointKind) -> EndpointRef {
        EndpointRef { transition: TransitionId(id), kind }
    }

    fn both(id: u32) -> [EndpointRef; 2] {
        [er(id, Origin), er(id, Destination)]
    }

    fn p(x: f64, y: f64) -> GeoPoint {
        GeoPoint::new(x, y)
    }

    /// o --1-- x --1-- v, o --3-- v, x --1-- d.  The short hop to x collects
    /// two full transitions; the long way round through v collects a third.
    fn detour_graph() -> (TransitGraph, Precomputed) {
        let graph = TransitGraph::from_parts(
            vec![p(0.0, 0.0), p(0.8, 0.0), p(0.8, 0.8), p(1.6, 0.0)],
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0), (1, 3, 1.0)],
        )
        .unwrap();
        let sets = vec![
            EndpointSet::new(),
            EndpointSet::from_refs(both(1).into_iter().chain(both(3))),
            EndpointSet::from_refs(both(2)),
            EndpointSet::new(),
        ];
        let m_psi = super::super::floyd_warshall(&graph);
        (graph, Precomputed { k: 1, sets, m_psi })
    }

    #[test]
    fn reachability_accepts_exact_budget() {
        let (graph, pre) = detour_graph();
        let _ = graph;
        assert!(check_reachability(&pre.m_psi, 2, 3, 2.0));
        assert!(!check_reachability(&pre.m_psi, 2, 3, 1.9));
    }

    #[test]
    fn exact_dominance_collapses_costlier_permutations() {
        let sets = vec![EndpointSet::new(); 4];
        let mut dt = DominanceTable::new(4, DominancePolicy::Exact, Objective::Max);
        // Two labels over the same vertex set ending at 3, different cost.
        let mut cheap = Label::start(0, EndpointSet::new(), 4);
        cheap = cheap.extend(1, 1.0, &sets).extend(2, 1.0, &sets).extend(3, 1.0, &sets);
        let mut costly = Label::start(0, EndpointSet::new(), 4);
        costly = costly.extend(2, 2.0, &sets).extend(1, 2.0, &sets).extend(3, 2.0, &sets);
        assert!(matches!(dt.admit(cheap), Admission::Admitted { .. }));
        assert!(matches!(dt.admit(costly), Admission::Dominated));
    }

    #[test]
    fn exact_dominance_spares_incomparable_labels() {
        // Same endpoints, same cost, but different intermediate vertices:
        // neither label may suppress the other, because each one's
        // continuations can collide with the other's visited set.
        let sets = vec![EndpointSet::new(); 4];
        let mut dt = DominanceTable::new(4, DominancePolicy::Exact, Objective::Max);
        let via1 = Label::start(0, EndpointSet::new(), 4).extend(1, 1.0, &sets).extend(
            3,
            1.0,
            &sets,
        );
        let via2 = Label::start(0, EndpointSet::new(), 4).extend(2, 1.0, &sets).extend(
            3,
            1.0,
            &sets,
        );
        assert!(matches!(dt.admit(via1), Admission::Admitted { .. }));
        assert!(matches!(dt.admit(via2), Admission::Admitted { evicted: 0, .. }));
        assert_eq!(dt.live_at(3).count(), 2);
    }

    #[test]
    fn aggressive_dominance_compares_counts_across_sides() {
        // Shorter travel distance plus a both-endpoint count beating the
        // candidate's any-endpoint count: the relaxed rule fires even though
        // the vertex sets are incomparable.
        let sets = vec![
            EndpointSet::new(),
            EndpointSet::from_refs(both(1).into_iter().chain(both(2)).chain(both(3)).chain(both(4))),
            EndpointSet::from_refs([er(1, Origin), er(2, Origin)]),
            EndpointSet::new(),
        ];
        let mut dt = DominanceTable::new(4, DominancePolicy::Aggressive, Objective::Max);
        let strong = Label::start(0, EndpointSet::new(), 4).extend(1, 3.9, &sets).extend(
            3,
            0.0001,
            &sets,
        );
        let weak = Label::start(0, EndpointSet::new(), 4).extend(2, 4.5, &sets).extend(
            3,
            0.0001,
            &sets,
        );
        // strong: td ≈ 3.9, four transitions with both endpoints.
        // weak: td ≈ 4.5, two transitions by one endpoint each.
        assert!(matches!(dt.admit(strong), Admission::Admitted { .. }));
        assert!(matches!(dt.admit(weak), Admission::Dominated));
    }

    #[test]
    fn plan_takes_the_richer_detour() {
        let (graph, pre) = detour_graph();
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        let (best, _) = plan(&graph, &pre, 0, 3, 5.0, &opts).unwrap();
        let best = best.unwrap();
        assert_eq!(best.vertices, vec![0, 2, 1, 3]);
        assert_eq!(best.td, 5.0);
        assert_eq!(best.count(Semantics::Exists), 3);
    }

    /// The relaxed rule evicts the direct hop to v after the richer label
    /// through x lands there first — and the richer label then dead-ends on
    /// the simple-path constraint, losing the true optimum.  This is why
    /// `Exact` is the default.
    #[test]
    fn aggressive_dominance_can_lose_the_optimum() {
        let (graph, pre) = detour_graph();
        let mut opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        opts.dominance = DominancePolicy::Aggressive;
        let (best, _) = plan(&graph, &pre, 0, 3, 5.0, &opts).unwrap();
        let best = best.unwrap();
        assert_eq!(best.count(Semantics::Exists), 2, "the detour answer is lost");
        assert_eq!(best.vertices, vec![0, 1, 3]);
    }

    #[test]
    fn plan_min_prefers_the_quiet_route() {
        let (graph, pre) = detour_graph();
        let opts = PlanOptions::new(Objective::Min, Semantics::Exists);
        let (best, stats) = plan(&graph, &pre, 0, 3, 5.0, &opts).unwrap();
        let best = best.unwrap();
        assert_eq!(best.vertices, vec![0, 1, 3]);
        assert_eq!(best.count(Semantics::Exists), 2);
        // Once the incumbent lands, the richer partials are cut off.
        assert!(stats.bounded > 0);
    }

    #[test]
    fn plan_returns_none_beyond_reach() {
        let (graph, pre) = detour_graph();
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        let (best, stats) = plan(&graph, &pre, 0, 3, 1.5, &opts).unwrap();
        assert!(best.is_none());
        assert_eq!(stats.pushed, 0);
    }

    #[test]
    fn plan_handles_origin_equal_destination() {
        let (graph, pre) = detour_graph();
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        let (best, _) = plan(&graph, &pre, 1, 1, 1.0, &opts).unwrap();
        let best = best.unwrap();
        assert_eq!(best.vertices, vec![1]);
        assert_eq!(best.td, 0.0);
        assert_eq!(best.count(Semantics::Exists), 2);
    }

    #[test]
    fn plan_rejects_bad_inputs() {
        let (graph, pre) = detour_graph();
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        assert!(plan(&graph, &pre, 0, 9, 5.0, &opts).is_err());
        assert!(plan(&graph, &pre, 0, 3, 0.0, &opts).is_err());
        assert!(plan(&graph, &pre, 0, 3, -1.0, &opts).is_err());
        assert!(plan(&graph, &pre, 0, 3, f64::NAN, &opts).is_err());
    }

    #[test]
    fn skyline_holds_no_mutually_dominating_labels() {
        let (graph, pre) = detour_graph();
        for objective in [Objective::Max, Objective::Min] {
            let mut dt = DominanceTable::new(
                graph.vertex_count(),
                DominancePolicy::Exact,
                objective,
            );
            // Feed it every label a small exhaustive walk generates.
            let mut stack = vec![Label::start(0, pre.sets[0].clone(), graph.vertex_count())];
            while let Some(label) = stack.pop() {
                for &(nb, w) in graph.neighbors(label.end()) {
                    if label.visits(nb) || label.td + w > 6.0 {
                        continue;
                    }
                    let ext = label.extend(nb, w, &pre.sets);
                    stack.push(ext.clone());
                    let _ = dt.admit(ext);
                }
            }
            for v in 0..graph.vertex_count() as VertexId {
                let live: Vec<&Label> = dt.live_at(v).collect();
                for a in &live {
                    for b in &live {
                        if !std::ptr::eq(*a, *b) {
                            assert!(!dt.dominates(a, b), "skyline violated at vertex {v}");
                        }
                    }
                }
            }
        }
    }
}
