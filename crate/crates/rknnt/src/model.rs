//! Core domain types: routes, transitions, query routes, and the
//! reverse-kNN result shapes shared by the index, the query pipeline, and
//! the brute-force oracles.

use std::collections::BTreeSet;
use std::fmt;

use crate::geometry::GeoPoint;

/// Dense internal identifier of a route.  Assigned at ingestion; external
/// identifiers live in the dataset's side table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RouteId(pub u32);

impl fmt::Display for RouteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense internal identifier of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub u32);

impl fmt::Display for TransitionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A transit route: an ordered sequence of at least two stops.
#[derive(Clone, Debug)]
pub struct Route {
    pub id: RouteId,
    pub points: Vec<GeoPoint>,
}

impl Route {
    /// # Panics
    ///
    /// Panics when fewer than two points are supplied; ingestion filters
    /// short rows out before routes are constructed.
    pub fn new(id: RouteId, points: Vec<GeoPoint>) -> Self {
        assert!(points.len() >= 2, "route {id} needs at least two points");
        Route { id, points }
    }
}

/// Which end of a transition a point is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EndpointKind {
    Origin,
    Destination,
}

impl EndpointKind {
    pub fn letter(self) -> char {
        match self {
            EndpointKind::Origin => 'o',
            EndpointKind::Destination => 'd',
        }
    }
}

/// One observed passenger movement: an origin point and a destination point.
#[derive(Clone, Copy, Debug)]
pub struct Transition {
    pub id: TransitionId,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
}

impl Transition {
    pub fn new(id: TransitionId, origin: GeoPoint, destination: GeoPoint) -> Self {
        Transition { id, origin, destination }
    }

    pub fn endpoint(&self, kind: EndpointKind) -> GeoPoint {
        match kind {
            EndpointKind::Origin => self.origin,
            EndpointKind::Destination => self.destination,
        }
    }

    pub fn origin_ref(&self) -> TransitionPointRef {
        TransitionPointRef { transition: self.id, kind: EndpointKind::Origin, location: self.origin }
    }

    pub fn destination_ref(&self) -> TransitionPointRef {
        TransitionPointRef {
            transition: self.id,
            kind: EndpointKind::Destination,
            location: self.destination,
        }
    }
}

/// One endpoint of a transition, with its location attached.  This is the
/// leaf payload of the transition index and the unit the pipeline filters,
/// collects, and refines.
#[derive(Clone, Copy, Debug)]
pub struct TransitionPointRef {
    pub transition: TransitionId,
    pub kind: EndpointKind,
    pub location: GeoPoint,
}

impl TransitionPointRef {
    pub fn endpoint(&self) -> EndpointRef {
        EndpointRef { transition: self.transition, kind: self.kind }
    }
}

/// A location-free endpoint handle, orderable so result sets have one stable
/// form regardless of how they were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EndpointRef {
    pub transition: TransitionId,
    pub kind: EndpointKind,
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.transition, self.kind.letter())
    }
}

/// A query route: the stop sequence of a route being proposed or probed.
/// A single point is a valid query.
#[derive(Clone, Debug)]
pub struct QueryRoute {
    pub points: Vec<GeoPoint>,
}

impl QueryRoute {
    /// # Panics
    ///
    /// Panics on an empty point list ("empty query").
    pub fn new(points: Vec<GeoPoint>) -> Self {
        assert!(!points.is_empty(), "empty query");
        QueryRoute { points }
    }

    pub fn single(p: GeoPoint) -> Self {
        QueryRoute { points: vec![p] }
    }
}

/// How endpoint hits combine into qualifying transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semantics {
    /// A transition qualifies when at least one endpoint takes the query as
    /// a k-nearest route.
    Exists,
    /// Both endpoints must take the query as a k-nearest route.
    ForAll,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::Exists => "exists",
            Semantics::ForAll => "forall",
        }
    }
}

impl std::str::FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exists" => Ok(Semantics::Exists),
            "forall" => Ok(Semantics::ForAll),
            other => Err(format!("unknown semantics `{other}` (expected `exists` or `forall`)")),
        }
    }
}

/// The answer to a reverse-kNN query: which transitions would adopt the
/// query route, and through which endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RknntResult {
    pub semantics: Semantics,
    pub k: u32,
    /// Qualifying transitions, deduplicated and ordered.
    pub transitions: BTreeSet<TransitionId>,
    /// The endpoint hits backing `transitions`.  Under `ForAll` both
    /// endpoints of every listed transition are present; under `Exists` at
    /// least one is.
    pub endpoint_hits: BTreeSet<EndpointRef>,
}

impl RknntResult {
    pub fn ids(&self) -> Vec<TransitionId> {
        self.transitions.iter().copied().collect()
    }
}

/// Fold a set of endpoint hits into the final result under the requested
/// semantics.  `Exists` keeps every transition with a hit; `ForAll` keeps
/// only transitions whose origin *and* destination were hit, and drops the
/// unpaired hits from the record.
pub fn assemble_result(
    hits: &BTreeSet<EndpointRef>,
    semantics: Semantics,
    k: u32,
) -> RknntResult {
    match semantics {
        Semantics::Exists => {
            let transitions = hits.iter().map(|h| h.transition).collect();
            RknntResult { semantics, k, transitions, endpoint_hits: hits.clone() }
        }
        Semantics::ForAll => {
            let transitions: BTreeSet<TransitionId> = hits
                .iter()
                .filter(|h| h.kind == EndpointKind::Origin)
                .map(|h| h.transition)
                .filter(|t| {
                    hits.contains(&EndpointRef { transition: *t, kind: EndpointKind::Destination })
                })
                .collect();
            let endpoint_hits = hits
                .iter()
                .filter(|h| transitions.contains(&h.transition))
                .copied()
                .collect();
            RknntResult { semantics, k, transitions, endpoint_hits }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hit(id: u32, kind: EndpointKind) -> EndpointRef {
        EndpointRef { transition: TransitionId(id), kind }
    }

    #[test]
    fn exists_keeps_any_hit_forall_needs_both_ends() {
        let hits: BTreeSet<_> = [
            hit(1, EndpointKind::Origin),
            hit(2, EndpointKind::Origin),
            hit(2, EndpointKind::Destination),
        ]
        .into_iter()
        .collect();

        let exists = assemble_result(&hits, Semantics::Exists, 1);
        assert_eq!(exists.ids(), vec![TransitionId(1), TransitionId(2)]);
        assert_eq!(exists.endpoint_hits.len(), 3);

        let forall = assemble_result(&hits, Semantics::ForAll, 1);
        assert_eq!(forall.ids(), vec![TransitionId(2)]);
        // The unpaired hit on transition 1 is dropped from the record.
        assert_eq!(forall.endpoint_hits.len(), 2);
        assert!(forall.endpoint_hits.iter().all(|h| h.transition == TransitionId(2)));
    }

    #[test]
    fn empty_hits_give_empty_results() {
        let hits = BTreeSet::new();
        for semantics in [Semantics::Exists, Semantics::ForAll] {
            let r = assemble_result(&hits, semantics, 3);
            assert!(r.transitions.is_empty());
            assert!(r.endpoint_hits.is_empty());
        }
    }

    #[test]
    fn endpoint_ref_prints_id_and_side() {
        assert_eq!(hit(4, EndpointKind::Destination).to_string(), "4d");
        assert_eq!(hit(12, EndpointKind::Origin).to_string(), "12o");
    }

    proptest! {
        /// Requiring both endpoints can only narrow the answer, never widen
        /// it — the strict-subset relation between the two semantics.
        #[test]
        fn forall_result_is_subset_of_exists(raw in prop::collection::btree_set((0u32..40, prop::bool::ANY), 0..60)) {
            let hits: BTreeSet<EndpointRef> = raw
                .into_iter()
                .map(|(id, is_origin)| hit(id, if is_origin { EndpointKind::Origin } else { EndpointKind::Destination }))
                .collect();
            let exists = assemble_result(&hits, Semantics::Exists, 5);
            let forall = assemble_result(&hits, Semantics::ForAll, 5);
            prop_assert!(forall.transitions.is_subset(&exists.transitions));
            // ForAll keeps exactly the paired hits.
            for t in &forall.transitions {
                prop_assert!(forall.endpoint_hits.contains(&hit(t.0, EndpointKind::Origin)));
                prop_assert!(forall.endpoint_hits.contains(&hit(t.0, EndpointKind::Destination)));
            }
        }
    }
}
