//! Small worked examples shared by the test suites.
//!
//! Both scenarios are hand-checked: the expected answers asserted in the
//! tests were derived with pencil-and-paper distance comparisons (and the
//! brute-force oracles agree).  They are deliberately tiny — every distance
//! involved can be verified by eye — and they exercise the interesting
//! geometry: shared stops between routes, endpoints split between rival
//! routes, a budget-bound detour network with a branch that can never reach
//! the destination in time.

use crate::geometry::GeoPoint;
use crate::model::{
    EndpointKind, EndpointRef, QueryRoute, Route, RouteId, Transition, TransitionId,
};
use crate::planner::{floyd_warshall, EndpointSet, Precomputed, TransitGraph, VertexId};

/// Bus routes, observed transitions, and a candidate query route in one
/// 12 km × 10 km frame.
pub struct QueryFixture {
    pub routes: Vec<Route>,
    pub transitions: Vec<Transition>,
    pub query: QueryRoute,
}

/// A road network with per-vertex endpoint sets and an origin/destination
/// pair whose best route within the budget is known.
pub struct PlanFixture {
    pub graph: TransitGraph,
    pub pre: Precomputed,
    pub origin: VertexId,
    pub dest: VertexId,
    pub budget: f64,
}

fn p(x: f64, y: f64) -> GeoPoint {
    GeoPoint::new(x, y)
}

/// Four bus routes around a horizontal query corridor at y = 4.
///
/// Routes 1 and 4 share the stop (1, 5); route 2 hugs the bottom edge;
/// route 3 runs along the top right.  Six transitions commute across the
/// frame.  Only transition 4 rides the corridor itself: both its endpoints
/// are nearer the query than any existing route, so it is the lone reverse
/// nearest neighbor at `k = 1` under either semantics.
pub fn crossing_routes() -> QueryFixture {
    let routes = vec![
        Route::new(RouteId(1), vec![p(1.0, 7.0), p(1.0, 5.0), p(1.0, 3.0), p(1.0, 1.0)]),
        Route::new(RouteId(2), vec![p(0.0, 0.0), p(1.0, 0.5), p(2.0, 0.5), p(3.0, 0.0)]),
        Route::new(RouteId(3), vec![p(5.0, 8.0), p(6.0, 7.5), p(7.0, 7.0), p(8.0, 6.5)]),
        Route::new(RouteId(4), vec![p(0.0, 6.0), p(1.0, 5.0), p(2.0, 6.0)]),
    ];
    let t = |id: u32, o: (f64, f64), d: (f64, f64)| Transition {
        id: TransitionId(id),
        origin: p(o.0, o.1),
        destination: p(d.0, d.1),
    };
    let transitions = vec![
        t(1, (0.6, 6.8), (1.4, 2.2)),
        t(2, (0.5, 0.2), (2.5, 0.2)),
        t(3, (5.5, 7.8), (7.5, 6.8)),
        t(4, (4.5, 4.3), (7.5, 3.7)),
        t(5, (1.2, 1.3), (2.8, 1.1)),
        t(6, (0.7, 5.2), (1.3, 5.6)),
    ];
    let query =
        QueryRoute::new(vec![p(4.0, 4.0), p(5.0, 4.0), p(6.0, 4.0), p(7.0, 4.0), p(8.0, 4.0)]);
    QueryFixture { routes, transitions, query }
}

/// Ten stops (ids 0–9, nicknamed `a`–`j` in the comments below) connected
/// by fifteen road segments.  Endpoint sets are authored directly rather
/// than computed from routes: the fixture freezes a known search landscape.
///
/// With budget 6.0 from `a` to `j`, the best patronage route is
/// `a-c-f-h-j`: travel distance 5.4, touching transitions 1–4 and 6.  The
/// branch through vertex 3 (`d`) is a trap — its shortest exit to `j` is
/// 5.2, more than the budget leaves after reaching it, so a planner that
/// checks reachability never even queues it.
pub fn corridor_network() -> PlanFixture {
    let locations = vec![
        p(0.0, 0.0),   // 0 a
        p(1.2, 0.9),   // 1 b
        p(0.9, 0.0),   // 2 c
        p(0.7, -0.7),  // 3 d
        p(2.3, 0.5),   // 4 e
        p(2.2, -0.4),  // 5 f
        p(2.0, -1.3),  // 6 g
        p(3.4, 0.2),   // 7 h
        p(4.3, 0.8),   // 8 i
        p(4.7, 0.0),   // 9 j
    ];
    // Weights are road distances: at least the straight-line separation.
    let edges: &[(VertexId, VertexId, f64)] = &[
        (0, 1, 1.6), // a-b
        (0, 2, 1.0), // a-c
        (0, 3, 1.0), // a-d
        (1, 4, 1.5), // b-e
        (2, 4, 1.9), // c-e
        (2, 5, 1.5), // c-f
        (3, 5, 2.3), // d-f
        (3, 6, 1.5), // d-g
        (6, 5, 1.0), // g-f
        (4, 7, 1.4), // e-h
        (4, 9, 2.9), // e-j
        (5, 7, 1.4), // f-h
        (7, 8, 1.2), // h-i
        (7, 9, 1.5), // h-j
        (8, 9, 1.0), // i-j
    ];
    let graph = TransitGraph::from_parts(locations, edges).expect("fixture graph is valid");
    let m_psi = floyd_warshall(&graph);

    let er = |id: u32, kind: EndpointKind| EndpointRef { transition: TransitionId(id), kind };
    let o = EndpointKind::Origin;
    let d = EndpointKind::Destination;
    let sets = vec![
        EndpointSet::from_refs([er(1, o)]),                       // a
        EndpointSet::from_refs([er(1, d)]),                       // b
        EndpointSet::from_refs([er(1, d), er(3, o), er(4, o)]),   // c
        EndpointSet::from_refs([er(5, o)]),                       // d
        EndpointSet::from_refs([er(2, o)]),                       // e
        EndpointSet::from_refs([er(2, o), er(3, d), er(4, d)]),   // f
        EndpointSet::from_refs([er(5, o)]),                       // g
        EndpointSet::from_refs([er(2, d)]),                       // h
        EndpointSet::from_refs([er(6, o)]),                       // i
        EndpointSet::from_refs([er(6, d)]),                       // j
    ];

    PlanFixture {
        graph,
        pre: Precomputed { k: 1, sets, m_psi },
        origin: 0,
        dest: 9,
        budget: 6.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{voronoi_filter, Extent, Mbr};
    use crate::model::Semantics;
    use crate::oracle::{maxrknnt_bruteforce, rknnt_bruteforce};
    use crate::planner::{plan, Objective, PlanOptions};

    #[test]
    fn crossing_reverse_neighbors_at_k1_are_exactly_transition_4() {
        let fx = crossing_routes();
        for semantics in [Semantics::Exists, Semantics::ForAll] {
            let got = rknnt_bruteforce(&fx.routes, &fx.transitions, &fx.query, 1, semantics);
            assert_eq!(
                got.transitions,
                [TransitionId(4)].into_iter().collect(),
                "semantics {semantics:?}"
            );
        }
        // At k = 1 the two semantics coincide here because transition 4
        // qualifies with both endpoints and nothing else qualifies at all.
        let forall = rknnt_bruteforce(&fx.routes, &fx.transitions, &fx.query, 1, Semantics::ForAll);
        assert_eq!(forall.endpoint_hits.len(), 2);
    }

    #[test]
    fn crossing_results_grow_with_k() {
        let fx = crossing_routes();
        for semantics in [Semantics::Exists, Semantics::ForAll] {
            let mut previous = std::collections::BTreeSet::new();
            for k in 1..=5 {
                let got =
                    rknnt_bruteforce(&fx.routes, &fx.transitions, &fx.query, k, semantics);
                assert!(
                    previous.is_subset(&got.transitions),
                    "k={k} lost transitions present at k-1"
                );
                previous = got.transitions;
            }
            // k exceeding the number of routes: no endpoint can be crowded out.
            assert_eq!(previous.len(), fx.transitions.len());
        }
    }

    /// The shared stop (1, 5) alone certifies the box around transition 6's
    /// endpoints: every point of that box is closer to the stop than to any
    /// query stop, so a filter may discard the whole box unexamined.
    #[test]
    fn crossing_shared_stop_covers_the_northwest_box() {
        let fx = crossing_routes();
        let stop = GeoPoint::new(1.0, 5.0);
        let box_t6 = Mbr::new(GeoPoint::new(0.7, 5.2), GeoPoint::new(1.3, 5.6));
        assert!(voronoi_filter(&[stop], &fx.query.points, &Extent::Box(box_t6)));
    }

    #[test]
    fn corridor_edge_weights_are_at_least_straight_line() {
        let fx = corridor_network();
        for v in 0..fx.graph.vertex_count() as VertexId {
            for &(nb, w) in fx.graph.neighbors(v) {
                let line = fx.graph.location(v).dist(&fx.graph.location(nb));
                assert!(
                    w >= line,
                    "edge {v}-{nb} weight {w} under straight line {line}"
                );
            }
        }
    }

    #[test]
    fn corridor_shortest_paths_match_hand_values() {
        let fx = corridor_network();
        // a to j: a-c-f-h-j.
        assert!((fx.pre.m_psi.get(0, 9) - 5.4).abs() < 1e-9);
        // d to j: d-f-h-j — longer than any budget remaining after a-d.
        assert!((fx.pre.m_psi.get(3, 9) - 5.2).abs() < 1e-9);
    }

    #[test]
    fn corridor_bruteforce_finds_the_worked_optimum() {
        let fx = corridor_network();
        let best = maxrknnt_bruteforce(
            &fx.graph,
            &fx.pre,
            fx.origin,
            fx.dest,
            fx.budget,
            Objective::Max,
            Semantics::Exists,
        )
        .expect("the destination is reachable");
        assert_eq!(best.vertices, vec![0, 2, 5, 7, 9]);
        assert!((best.td - 5.4).abs() < 1e-9);
        assert_eq!(best.count(Semantics::Exists), 5);
        assert_eq!(
            best.omega_ids(Semantics::Exists),
            [1, 2, 3, 4, 6].map(TransitionId).into_iter().collect()
        );
    }

    #[test]
    fn corridor_plan_matches_bruteforce_everywhere() {
        let fx = corridor_network();
        for objective in [Objective::Max, Objective::Min] {
            for semantics in [Semantics::Exists, Semantics::ForAll] {
                let opts = PlanOptions::new(objective, semantics);
                let (got, _) =
                    plan(&fx.graph, &fx.pre, fx.origin, fx.dest, fx.budget, &opts).unwrap();
                let want = maxrknnt_bruteforce(
                    &fx.graph,
                    &fx.pre,
                    fx.origin,
                    fx.dest,
                    fx.budget,
                    objective,
                    semantics,
                );
                let got = got.expect("reachable");
                let want = want.expect("reachable");
                assert_eq!(got.count(semantics), want.count(semantics), "{objective:?}/{semantics:?}");
                assert_eq!(got.td, want.td, "{objective:?}/{semantics:?}");
                assert_eq!(got.vertices, want.vertices, "{objective:?}/{semantics:?}");
            }
        }
    }

    #[test]
    fn corridor_plan_never_queues_the_dead_branch() {
        let fx = corridor_network();
        let opts = PlanOptions::new(Objective::Max, Semantics::Exists);
        let (best, stats) =
            plan(&fx.graph, &fx.pre, fx.origin, fx.dest, fx.budget, &opts).unwrap();
        let best = best.unwrap();
        assert_eq!(best.vertices, vec![0, 2, 5, 7, 9]);
        assert!((best.td - 5.4).abs() < 1e-9);
        assert_eq!(best.count(Semantics::Exists), 5);
        // Vertex 3 cannot reach the destination within what the budget
        // leaves, so no label ending there ever enters the queue.
        assert!(!stats.enqueued[3]);
    }
}
