//! The two spatial indexes behind the query pipeline.
//!
//! [`RrTree`] indexes every distinct route stop once, carrying the ids of
//! all routes calling there (the stop's *crossover set*); each tree node
//! additionally knows the set of route ids appearing anywhere beneath it.
//! [`TrTree`] indexes transition endpoints — two points per transition —
//! and supports dynamic insertion and removal so an index can track a live
//! feed of trips.  Stops that should be the same place must be bit-identical
//! (ingestion guarantees that by quantizing coordinates before projection).

mod rtree;

pub(crate) use rtree::{Node, NodeKind, PointEntry, RTree, Scanned};

use std::collections::{BTreeMap, BTreeSet};

use crate::geometry::{GeoPoint, Mbr, PointKey};
use crate::model::{EndpointKind, Route, RouteId, Transition, TransitionId, TransitionPointRef};
use crate::Error;

/// A distinct stop location and every route calling there, sorted by id.
#[derive(Clone, Debug)]
pub struct StopEntry {
    pub location: GeoPoint,
    pub routes: Vec<RouteId>,
}

impl PointEntry for StopEntry {
    fn location(&self) -> GeoPoint {
        self.location
    }
}

impl PointEntry for TransitionPointRef {
    fn location(&self) -> GeoPoint {
        self.location
    }
}

/// Route-stop index: distinct stops with crossover sets, plus a per-node
/// route-id list used to count routes wholesale during refinement.
pub struct RrTree {
    tree: RTree<StopEntry>,
    /// Route ids under each arena node, sorted; indexed by node id.
    nlist: Vec<Vec<RouteId>>,
    /// Crossover set per distinct stop.
    crossovers: BTreeMap<PointKey, Vec<RouteId>>,
}

impl RrTree {
    /// Index a non-empty route set.  Stops shared between routes merge into
    /// one entry whose crossover set lists every route involved.
    pub fn build(routes: &[Route]) -> Result<Self, Error> {
        if routes.is_empty() {
            return Err(Error::EmptyRoutes);
        }
        let mut seen = BTreeSet::new();
        for r in routes {
            if !seen.insert(r.id) {
                return Err(Error::Mismatch(format!("route id {} appears twice", r.id.0)));
            }
        }

        let mut merged: BTreeMap<PointKey, (GeoPoint, BTreeSet<RouteId>)> = BTreeMap::new();
        for r in routes {
            for p in &r.points {
                let slot = merged.entry(PointKey::of(p)).or_insert((*p, BTreeSet::new()));
                slot.1.insert(r.id);
            }
        }
        let mut crossovers = BTreeMap::new();
        let entries: Vec<StopEntry> = merged
            .into_iter()
            .map(|(key, (location, ids))| {
                let routes: Vec<RouteId> = ids.into_iter().collect();
                crossovers.insert(key, routes.clone());
                StopEntry { location, routes }
            })
            .collect();

        let tree = RTree::bulk(entries);
        let nlist = route_lists(&tree);
        Ok(RrTree { tree, nlist, crossovers })
    }

    /// Adopt a deserialized stop tree, re-deriving the per-node route lists
    /// and the crossover table from its leaves.
    pub(crate) fn from_tree(tree: RTree<StopEntry>) -> Self {
        let nlist = route_lists(&tree);
        let mut crossovers = BTreeMap::new();
        for id in tree.dfs_order() {
            if let NodeKind::Leaf(entries) = &tree.node(id).kind {
                for e in entries {
                    crossovers.insert(PointKey::of(&e.location), e.routes.clone());
                }
            }
        }
        RrTree { tree, nlist, crossovers }
    }

    /// Number of distinct stops indexed.
    pub fn stop_count(&self) -> usize {
        self.tree.len()
    }

    /// Every route calling at exactly this location, if it is a stop.
    pub fn crossover(&self, p: &GeoPoint) -> Option<&[RouteId]> {
        self.crossovers.get(&PointKey::of(p)).map(Vec::as_slice)
    }

    /// Route ids appearing beneath the given tree node.
    pub(crate) fn nlist(&self, node: usize) -> &[RouteId] {
        &self.nlist[node]
    }

    pub(crate) fn tree(&self) -> &RTree<StopEntry> {
        &self.tree
    }

    /// The box around every stop.
    pub fn bounds(&self) -> Option<Mbr> {
        self.tree.root().map(|r| self.tree.node(r).mbr)
    }
}

/// Bottom-up union of route ids per node, in a vector indexed by arena id.
fn route_lists(tree: &RTree<StopEntry>) -> Vec<Vec<RouteId>> {
    let order = tree.dfs_order();
    let size = order.iter().copied().max().map_or(0, |m| m + 1);
    let mut nlist: Vec<Vec<RouteId>> = vec![Vec::new(); size];
    for &id in order.iter().rev() {
        let mut ids: BTreeSet<RouteId> = BTreeSet::new();
        match &tree.node(id).kind {
            NodeKind::Leaf(entries) => {
                for e in entries {
                    ids.extend(e.routes.iter().copied());
                }
            }
            NodeKind::Inner(children) => {
                for &c in children {
                    ids.extend(nlist[c].iter().copied());
                }
            }
        }
        nlist[id] = ids.into_iter().collect();
    }
    nlist
}

/// Transition-endpoint index: two points per transition, updatable in place.
pub struct TrTree {
    tree: RTree<TransitionPointRef>,
    items: BTreeMap<TransitionId, Transition>,
}

impl TrTree {
    /// Index a transition set; empty is fine (removal can empty a live
    /// index, so queries must already cope).
    pub fn build(transitions: &[Transition]) -> Result<Self, Error> {
        let mut items = BTreeMap::new();
        for t in transitions {
            if items.insert(t.id, *t).is_some() {
                return Err(Error::DuplicateTransition(t.id));
            }
        }
        let entries: Vec<TransitionPointRef> = items
            .values()
            .flat_map(|t| [t.origin_ref(), t.destination_ref()])
            .collect();
        Ok(TrTree { tree: RTree::bulk(entries), items })
    }

    /// Adopt a deserialized endpoint tree, re-deriving the transition table
    /// from its leaves.  Every transition must contribute exactly one origin
    /// and one destination entry.
    pub(crate) fn from_tree(tree: RTree<TransitionPointRef>) -> Result<Self, Error> {
        let mut origins: BTreeMap<TransitionId, GeoPoint> = BTreeMap::new();
        let mut destinations: BTreeMap<TransitionId, GeoPoint> = BTreeMap::new();
        for id in tree.dfs_order() {
            if let NodeKind::Leaf(entries) = &tree.node(id).kind {
                for e in entries {
                    let slot = match e.kind {
                        EndpointKind::Origin => &mut origins,
                        EndpointKind::Destination => &mut destinations,
                    };
                    if slot.insert(e.transition, e.location).is_some() {
                        return Err(Error::Snapshot(format!(
                            "transition {} appears with two {} endpoints",
                            e.transition,
                            e.kind.letter()
                        )));
                    }
                }
            }
        }
        let mut items = BTreeMap::new();
        for (id, origin) in origins {
            let destination = destinations.remove(&id).ok_or_else(|| {
                Error::Snapshot(format!("transition {id} has no destination endpoint"))
            })?;
            items.insert(id, Transition { id, origin, destination });
        }
        if let Some((&id, _)) = destinations.first_key_value() {
            return Err(Error::Snapshot(format!("transition {id} has no origin endpoint")));
        }
        Ok(TrTree { tree, items })
    }

    pub fn insert(&mut self, t: Transition) -> Result<(), Error> {
        if self.items.contains_key(&t.id) {
            return Err(Error::DuplicateTransition(t.id));
        }
        self.tree.insert(t.origin_ref());
        self.tree.insert(t.destination_ref());
        self.items.insert(t.id, t);
        Ok(())
    }

    pub fn remove(&mut self, id: TransitionId) -> Result<Transition, Error> {
        let t = self.items.remove(&id).ok_or(Error::UnknownTransition(id))?;
        let origin_gone = self
            .tree
            .remove_where(t.origin, &|e| e.transition == id && e.kind == EndpointKind::Origin);
        let destination_gone = self.tree.remove_where(t.destination, &|e| {
            e.transition == id && e.kind == EndpointKind::Destination
        });
        assert!(origin_gone && destination_gone, "endpoint index out of sync");
        Ok(t)
    }

    pub fn contains(&self, id: TransitionId) -> bool {
        self.items.contains_key(&id)
    }

    /// Number of transitions indexed (endpoints are twice this).
    pub fn transition_count(&self) -> usize {
        self.items.len()
    }

    /// The indexed transitions in id order.
    pub fn transitions(&self) -> impl Iterator<Item = &Transition> {
        self.items.values()
    }

    pub fn get(&self, id: TransitionId) -> Option<&Transition> {
        self.items.get(&id)
    }

    pub(crate) fn tree(&self) -> &RTree<TransitionPointRef> {
        &self.tree
    }
}
