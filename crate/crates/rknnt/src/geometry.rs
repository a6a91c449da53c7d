//! Planar geometry primitives: points, bounding boxes, bisector half-planes,
//! and the containment predicates the query pipeline prunes with.
//!
//! All coordinates are kilometres in a local planar frame (see
//! [`crate::ingest::Projection`] for how geographic data gets there).
//!
//! Every predicate that decides whether something is "closer" compares
//! *squared* distances.  Squared distances of the same operands are computed
//! identically everywhere, so the pruning rules and the brute-force scans
//! agree exactly even on boundary cases; `sqrt` is only applied when a
//! distance is reported.

/// A point in the local planar frame, in kilometres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GeoPoint { x, y }
    }

    /// Euclidean distance to `other`, in kilometres.
    pub fn dist(&self, other: &GeoPoint) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Squared Euclidean distance to `other`.  This is the comparison
    /// currency of the whole crate; see the module docs.
    pub fn dist_sq(&self, other: &GeoPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Minimum distance from a point to any point of a route (a route is just a
/// point sequence here; which points form a route is the caller's business).
///
/// # Panics
///
/// Panics on an empty point slice ("empty geometry").
pub fn point_route_dist(p: &GeoPoint, route: &[GeoPoint]) -> f64 {
    point_route_dist_sq(p, route).sqrt()
}

/// Squared variant of [`point_route_dist`]; the two agree on ordering.
pub fn point_route_dist_sq(p: &GeoPoint, route: &[GeoPoint]) -> f64 {
    assert!(!route.is_empty(), "empty geometry");
    route
        .iter()
        .map(|r| p.dist_sq(r))
        .fold(f64::INFINITY, f64::min)
}

/// A hashable, bit-exact identity for a point.
///
/// Stops that should be "the same place" are made bit-identical upstream
/// (ingestion quantizes geographic coordinates before projecting them), so
/// comparing raw bit patterns is both exact and cheap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointKey(u64, u64);

impl PointKey {
    pub fn of(p: &GeoPoint) -> Self {
        PointKey(p.x.to_bits(), p.y.to_bits())
    }
}

/// An axis-aligned minimum bounding rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mbr {
    pub min: GeoPoint,
    pub max: GeoPoint,
}

impl Mbr {
    pub fn new(min: GeoPoint, max: GeoPoint) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Mbr { min, max }
    }

    /// The degenerate box covering a single point.
    pub fn of_point(p: GeoPoint) -> Self {
        Mbr { min: p, max: p }
    }

    /// Tight box around a non-empty point set.
    ///
    /// # Panics
    ///
    /// Panics on an empty slice ("empty geometry").
    pub fn of_points(points: impl IntoIterator<Item = GeoPoint>) -> Self {
        let mut iter = points.into_iter();
        let first = iter.next().expect("empty geometry");
        iter.fold(Mbr::of_point(first), |mbr, p| mbr.expand_point(&p))
    }

    #[must_use]
    pub fn expand_point(&self, p: &GeoPoint) -> Mbr {
        Mbr {
            min: GeoPoint::new(self.min.x.min(p.x), self.min.y.min(p.y)),
            max: GeoPoint::new(self.max.x.max(p.x), self.max.y.max(p.y)),
        }
    }

    #[must_use]
    pub fn expand(&self, other: &Mbr) -> Mbr {
        self.expand_point(&other.min).expand_point(&other.max)
    }

    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        self.min.x <= p.x && p.x <= self.max.x && self.min.y <= p.y && p.y <= self.max.y
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }

    /// The four corners, in a fixed order.
    pub fn corners(&self) -> [GeoPoint; 4] {
        [
            self.min,
            GeoPoint::new(self.max.x, self.min.y),
            self.max,
            GeoPoint::new(self.min.x, self.max.y),
        ]
    }

    /// Squared distance from `p` to the nearest point of the box; zero when
    /// `p` lies inside.  Never exceeds the squared distance to any point the
    /// box contains (the coordinate clamps and the squaring are monotone, so
    /// this holds in floating point, not just on paper).
    pub fn min_dist_sq(&self, p: &GeoPoint) -> f64 {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(0.0);
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(0.0);
        dx * dx + dy * dy
    }

    pub fn min_dist(&self, p: &GeoPoint) -> f64 {
        self.min_dist_sq(p).sqrt()
    }

    /// Squared distance from `p` to the farthest corner; at least the squared
    /// distance to any point the box contains, in floating point too.
    pub fn max_dist_sq(&self, p: &GeoPoint) -> f64 {
        let dx = (p.x - self.min.x).abs().max((p.x - self.max.x).abs());
        let dy = (p.y - self.min.y).abs().max((p.y - self.max.y).abs());
        dx * dx + dy * dy
    }
}

/// Minimum distance from any point of `query` to the box.
///
/// # Panics
///
/// Panics on an empty query ("empty geometry").
pub fn min_dist_query_mbr(query: &[GeoPoint], mbr: &Mbr) -> f64 {
    min_dist_query_mbr_sq(query, mbr).sqrt()
}

/// Squared variant of [`min_dist_query_mbr`].
pub fn min_dist_query_mbr_sq(query: &[GeoPoint], mbr: &Mbr) -> f64 {
    assert!(!query.is_empty(), "empty geometry");
    query
        .iter()
        .map(|q| mbr.min_dist_sq(q))
        .fold(f64::INFINITY, f64::min)
}

/// The open half-plane of points strictly closer to `anchor` than to `rival`,
/// bounded by their perpendicular bisector.
///
/// Membership is decided by comparing squared distances to the two defining
/// points rather than by evaluating a line equation, so the test is exact
/// whenever the coordinate arithmetic is (and consistent with every other
/// distance comparison in the crate either way).
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    anchor: GeoPoint,
    rival: GeoPoint,
}

impl HalfPlane {
    /// Returns `None` when the two points coincide (no bisector exists).
    pub fn new(anchor: GeoPoint, rival: GeoPoint) -> Option<Self> {
        if anchor == rival {
            return None;
        }
        Some(HalfPlane { anchor, rival })
    }

    /// Strict containment: bisector ties go to the rival side, i.e. a point
    /// equidistant to both is *not* contained.
    pub fn contains_point(&self, p: &GeoPoint) -> bool {
        p.dist_sq(&self.anchor) < p.dist_sq(&self.rival)
    }

    /// A box is contained iff all four corners are: the half-plane is convex,
    /// so corner containment extends to the whole box.
    pub fn contains_mbr(&self, mbr: &Mbr) -> bool {
        mbr.corners().iter().all(|c| self.contains_point(c))
    }
}

/// Either a single point or a whole bounding box — the two shapes the
/// traversal hands to the pruning predicates.
#[derive(Clone, Copy, Debug)]
pub enum Extent {
    Point(GeoPoint),
    Box(Mbr),
}

impl From<GeoPoint> for Extent {
    fn from(p: GeoPoint) -> Self {
        Extent::Point(p)
    }
}

impl From<Mbr> for Extent {
    fn from(b: Mbr) -> Self {
        Extent::Box(b)
    }
}

/// Is `extent` contained in the filtering space of `r` against `query`, i.e.
/// in the intersection of the half-planes "closer to `r` than to `q`" over
/// all query points `q`?
///
/// Anything in that space is strictly closer to `r` — and hence to every
/// route passing through `r` — than to the entire query.  When `r` coincides
/// with some query point the space is empty and the answer is `false`.
pub fn filtering_space_contains(r: &GeoPoint, query: &[GeoPoint], extent: &Extent) -> bool {
    query.iter().all(|q| match HalfPlane::new(*r, *q) {
        None => false,
        Some(hp) => match extent {
            Extent::Point(p) => hp.contains_point(p),
            Extent::Box(b) => hp.contains_mbr(b),
        },
    })
}

/// Is `extent` inside the region of the plane that is closer to the route
/// (the union of the route points' cells in the Voronoi diagram of route
/// points and query points) than to the query?
///
/// For a point this is decided exactly.  For a box we certify that every
/// query point `q` is beaten by *some* route point on the whole box; the
/// winning route point may differ per `q`.  That test is sound — any point of
/// a certified box is strictly closer to the route than to the query — but
/// not complete, which is the right trade for a pruning rule.
pub fn voronoi_filter(route_pts: &[GeoPoint], query: &[GeoPoint], extent: &Extent) -> bool {
    if route_pts.is_empty() {
        return false;
    }
    match extent {
        Extent::Point(p) => {
            point_route_dist_sq(p, route_pts) < point_route_dist_sq(p, query)
        }
        Extent::Box(b) => query.iter().all(|q| {
            route_pts
                .iter()
                .any(|r| matches!(HalfPlane::new(*r, *q), Some(hp) if hp.contains_mbr(b)))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> GeoPoint {
        GeoPoint::new(x, y)
    }

    #[test]
    fn dist_matches_hand_values() {
        assert_eq!(p(0.0, 0.0).dist(&p(3.0, 4.0)), 5.0);
        assert_eq!(p(2.5, -1.0).dist(&p(2.5, -1.0)), 0.0);
    }

    #[test]
    fn point_route_distance_picks_nearest_stop() {
        let route = [p(3.0, 4.0), p(0.0, 2.0), p(5.0, 1.0)];
        assert_eq!(point_route_dist(&p(0.0, 0.0), &route), 2.0);
    }

    #[test]
    #[should_panic(expected = "empty geometry")]
    fn point_route_distance_rejects_empty_route() {
        point_route_dist(&p(0.0, 0.0), &[]);
    }

    #[test]
    fn mbr_min_dist_clamps_to_boundary() {
        let b = Mbr::new(p(1.0, 1.0), p(2.0, 2.0));
        assert_eq!(b.min_dist(&p(0.0, 0.0)), 2.0_f64.sqrt());
        // Inside the box the distance is zero.
        assert_eq!(b.min_dist(&p(1.5, 1.7)), 0.0);
        // Straight left of the box: only the x gap counts.
        assert_eq!(b.min_dist(&p(0.0, 1.5)), 1.0);
    }

    #[test]
    fn mbr_max_dist_reaches_farthest_corner() {
        let b = Mbr::new(p(1.0, 1.0), p(2.0, 2.0));
        // Farthest corner from the origin is (2,2).
        assert_eq!(b.max_dist_sq(&p(0.0, 0.0)), 8.0);
        // From inside, still the farthest corner.
        assert_eq!(b.max_dist_sq(&p(1.25, 1.25)), 0.75 * 0.75 * 2.0);
    }

    #[test]
    fn query_mbr_distance_takes_best_query_point() {
        let b = Mbr::new(p(1.0, 1.0), p(2.0, 2.0));
        let q = [p(0.0, 0.0), p(5.0, 5.0)];
        assert_eq!(min_dist_query_mbr(&q, &b), 2.0_f64.sqrt());
    }

    #[test]
    #[should_panic(expected = "empty geometry")]
    fn query_mbr_distance_rejects_empty_query() {
        min_dist_query_mbr(&[], &Mbr::of_point(p(0.0, 0.0)));
    }

    #[test]
    fn half_plane_membership_is_strict() {
        let hp = HalfPlane::new(p(0.0, 0.0), p(2.0, 0.0)).unwrap();
        assert!(hp.contains_point(&p(0.5, 3.0)));
        assert!(!hp.contains_point(&p(1.5, 3.0)));
        // Exactly on the bisector x = 1: ties go against the anchor.
        assert!(!hp.contains_point(&p(1.0, 7.0)));
    }

    #[test]
    fn half_plane_rejects_coincident_points() {
        assert!(HalfPlane::new(p(1.0, 1.0), p(1.0, 1.0)).is_none());
    }

    #[test]
    fn half_plane_box_containment_needs_all_corners() {
        let hp = HalfPlane::new(p(0.0, 0.0), p(2.0, 0.0)).unwrap();
        assert!(hp.contains_mbr(&Mbr::new(p(-1.0, -1.0), p(0.5, 1.0))));
        // Straddles the bisector.
        assert!(!hp.contains_mbr(&Mbr::new(p(0.5, -1.0), p(1.5, 1.0))));
    }

    #[test]
    fn filtering_space_needs_every_query_point_beaten() {
        let r = p(0.0, 0.0);
        let q = [p(4.0, 0.0), p(0.0, 4.0)];
        assert!(filtering_space_contains(&r, &q, &p(-0.5, -0.5).into()));
        // Closer to r than to (4,0), but not than to (0,4).
        assert!(!filtering_space_contains(&r, &q, &p(0.0, 2.5).into()));
    }

    #[test]
    fn filtering_space_is_empty_when_anchor_is_a_query_point() {
        let r = p(1.0, 1.0);
        let q = [p(1.0, 1.0), p(5.0, 5.0)];
        assert!(!filtering_space_contains(&r, &q, &p(0.0, 0.0).into()));
    }

    #[test]
    fn voronoi_filter_point_test_is_exact() {
        let route = [p(0.0, 0.0), p(0.0, 2.0)];
        let query = [p(4.0, 0.0)];
        assert!(voronoi_filter(&route, &query, &p(0.5, 1.0).into()));
        assert!(!voronoi_filter(&route, &query, &p(3.8, 0.0).into()));
        // Equidistant: the query keeps ties.
        assert!(!voronoi_filter(&[p(0.0, 0.0)], &query, &p(2.0, 0.0).into()));
    }

    #[test]
    fn voronoi_box_test_lets_route_points_split_the_work() {
        // Vertical 4-stop route at x = 0, query column at x = 3.  The tall
        // box next to the route is not inside any single stop's filtering
        // space, but for each query point some stop covers the whole box.
        let route = [p(0.0, 0.0), p(0.0, 2.0), p(0.0, 4.0), p(0.0, 6.0)];
        let query = [p(3.0, 1.0), p(3.0, 3.0), p(3.0, 5.0)];
        let tall = Mbr::new(p(-0.4, 0.5), p(-0.1, 5.5));
        for r in &route {
            assert!(
                !filtering_space_contains(r, &query, &tall.into()),
                "no single stop should cover the box on its own"
            );
        }
        assert!(voronoi_filter(&route, &query, &tall.into()));
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| GeoPoint::new(x, y))
    }

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<GeoPoint>> {
        prop::collection::vec(arb_point(), 1..=max)
    }

    proptest! {
        #[test]
        fn dist_is_a_metric(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert_eq!(a.dist(&b), b.dist(&a));
            prop_assert!(a.dist(&b) >= 0.0);
            prop_assert!(a.dist(&c) <= a.dist(&b) + b.dist(&c) + 1e-9);
        }

        #[test]
        fn route_distance_never_beats_individual_stops(
            x in arb_point(),
            route in arb_points(8),
        ) {
            let d = point_route_dist(&x, &route);
            for r in &route {
                prop_assert!(d <= x.dist(r));
            }
            prop_assert!(route.iter().any(|r| x.dist(r) == d));
        }

        #[test]
        fn mbr_distance_bounds_bracket_every_contained_point(
            x in arb_point(),
            pts in arb_points(6),
        ) {
            let mbr = Mbr::of_points(pts.iter().copied());
            for t in &pts {
                prop_assert!(mbr.min_dist_sq(&x) <= x.dist_sq(t));
                prop_assert!(mbr.max_dist_sq(&x) >= x.dist_sq(t));
            }
        }

        #[test]
        fn boxed_filtering_space_certifies_its_sample_points(
            r in arb_point(),
            query in arb_points(5),
            pts in arb_points(6),
        ) {
            let mbr = Mbr::of_points(pts.iter().copied());
            if filtering_space_contains(&r, &query, &mbr.into()) {
                for t in &pts {
                    prop_assert!(filtering_space_contains(&r, &query, &(*t).into()));
                }
            }
        }

        #[test]
        fn growing_the_query_only_shrinks_the_filtering_space(
            r in arb_point(),
            query in arb_points(5),
            extra in arb_point(),
            target in arb_point(),
        ) {
            let mut grown = query.clone();
            grown.push(extra);
            let e: Extent = target.into();
            if filtering_space_contains(&r, &grown, &e) {
                prop_assert!(filtering_space_contains(&r, &query, &e));
            }
        }

        #[test]
        fn voronoi_box_certificate_is_sound(
            route in arb_points(6),
            query in arb_points(5),
            pts in arb_points(6),
        ) {
            let mbr = Mbr::of_points(pts.iter().copied());
            if voronoi_filter(&route, &query, &mbr.into()) {
                for t in &pts {
                    prop_assert!(voronoi_filter(&route, &query, &(*t).into()));
                }
            }
        }

        #[test]
        fn voronoi_with_one_stop_is_plain_filtering_space(
            r in arb_point(),
            query in arb_points(5),
            pts in arb_points(4),
        ) {
            let route = [r];
            let exts: Vec<Extent> =
                vec![pts[0].into(), Mbr::of_points(pts.iter().copied()).into()];
            for e in &exts {
                prop_assert_eq!(
                    voronoi_filter(&route, &query, e),
                    filtering_space_contains(&r, &query, e)
                );
            }
        }
    }
}
