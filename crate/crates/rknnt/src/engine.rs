//! One loaded dataset: routes, live transition index, transit graph, and
//! the projection frame that ties them to the globe — plus binary snapshots
//! so a built dataset reloads in milliseconds instead of being re-parsed
//! and re-packed.
//!
//! Snapshots are bit-exact: every `f64` travels as its IEEE bits and both
//! trees are stored node-for-node in their canonical depth-first layout, so
//! a loaded engine answers every query with the identical traversal — and
//! saving it again reproduces the identical file.  Derived structures
//! (per-node route lists, crossover sets, the transit graph) are rebuilt on
//! load rather than stored; they are deterministic functions of what is.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::geometry::{GeoPoint, Mbr};
use crate::index::{Node, NodeKind, RTree, RrTree, StopEntry, TrTree};
use crate::ingest::{Frame, NamedTrack};
use crate::model::{
    EndpointKind, EndpointRef, Route, RouteId, Transition, TransitionId, TransitionPointRef,
};
use crate::planner::{build_graph, DistMatrix, EndpointSet, Precomputed, TransitGraph};
use crate::query::methods::QueryContext;
use crate::{Error, Result};

const INDEX_MAGIC: &[u8; 4] = b"RKIX";
const INDEX_VERSION: u32 = 1;
const PRECOMP_MAGIC: &[u8; 4] = b"RKPC";
const PRECOMP_VERSION: u32 = 1;

/// A dataset ready to answer queries and plan routes.
pub struct Engine {
    pub frame: Frame,
    pub routes: Vec<Route>,
    /// External route names, parallel to `routes`.
    pub route_names: Vec<String>,
    pub rr: RrTree,
    pub tr: TrTree,
    /// External transition names.
    pub transition_names: BTreeMap<TransitionId, String>,
    pub graph: TransitGraph,
}

impl Engine {
    /// Assemble an engine from parsed degree-space inputs.  Route and
    /// transition ids are assigned densely in input order; a trip with `n`
    /// points becomes `n - 1` transitions named after the trip (suffixed
    /// `#1..` when it splits).
    pub fn build(frame: Frame, route_tracks: &[NamedTrack], trips: &[NamedTrack]) -> Result<Self> {
        let mut routes = Vec::with_capacity(route_tracks.len());
        let mut route_names = Vec::with_capacity(route_tracks.len());
        for (i, t) in route_tracks.iter().enumerate() {
            if t.points.len() < 2 {
                return Err(Error::Mismatch(format!(
                    "route {:?} has {} stops; a route needs at least 2",
                    t.name,
                    t.points.len()
                )));
            }
            let points = t.points.iter().map(|&(la, lo)| frame.project(la, lo)).collect();
            routes.push(Route::new(RouteId(i as u32), points));
            route_names.push(t.name.clone());
        }

        let mut transitions = Vec::new();
        let mut transition_names = BTreeMap::new();
        for t in trips {
            if t.points.len() < 2 {
                return Err(Error::Mismatch(format!(
                    "trip {:?} has {} points; a trip needs at least 2",
                    t.name,
                    t.points.len()
                )));
            }
            let legs = t.points.len() - 1;
            for (j, pair) in t.points.windows(2).enumerate() {
                let id = TransitionId(transitions.len() as u32);
                let name =
                    if legs == 1 { t.name.clone() } else { format!("{}#{}", t.name, j + 1) };
                transitions.push(Transition::new(
                    id,
                    frame.project(pair[0].0, pair[0].1),
                    frame.project(pair[1].0, pair[1].1),
                ));
                transition_names.insert(id, name);
            }
        }

        let rr = RrTree::build(&routes)?;
        let tr = TrTree::build(&transitions)?;
        let graph = build_graph(&routes)?;
        Ok(Engine { frame, routes, route_names, rr, tr, transition_names, graph })
    }

    pub fn route_name(&self, id: RouteId) -> Option<&str> {
        self.route_names.get(id.0 as usize).map(String::as_str)
    }

    pub fn route_by_name(&self, name: &str) -> Option<RouteId> {
        self.route_names.iter().position(|n| n == name).map(|i| self.routes[i].id)
    }

    pub fn transition_name(&self, id: TransitionId) -> Option<&str> {
        self.transition_names.get(&id).map(String::as_str)
    }

    /// The context query strategies run against.
    pub fn query_context(&self, masked_route: Option<RouteId>) -> QueryContext<'_> {
        QueryContext { routes: &self.routes, rr: &self.rr, tr: &self.tr, masked_route }
    }

    /// Run the per-vertex reverse-kNN precomputation for this dataset.
    pub fn precompute(&self, k: u32) -> Precomputed {
        crate::planner::precompute(&self.graph, &self.rr, &self.tr, k)
    }

    /// Write the dataset snapshot.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Sink::new(BufWriter::new(File::create(path)?));
        w.bytes(INDEX_MAGIC)?;
        w.u32(INDEX_VERSION)?;
        w.f64(self.frame.anchor_lat)?;
        w.f64(self.frame.anchor_lon)?;

        w.u32(self.routes.len() as u32)?;
        for (route, name) in self.routes.iter().zip(&self.route_names) {
            w.u32(route.id.0)?;
            w.str(name)?;
            w.u32(route.points.len() as u32)?;
            for p in &route.points {
                w.point(p)?;
            }
        }

        // Names for exactly the transitions that are live in the index.
        let live: Vec<TransitionId> = self.tr.transitions().map(|t| t.id).collect();
        w.u32(live.len() as u32)?;
        for id in live {
            w.u32(id.0)?;
            match self.transition_names.get(&id) {
                Some(name) => w.str(name)?,
                None => w.str(&format!("t{}", id.0))?,
            }
        }

        write_tree(&mut w, self.rr.tree(), &mut |w, e: &StopEntry| {
            w.point(&e.location)?;
            w.u32(e.routes.len() as u32)?;
            for r in &e.routes {
                w.u32(r.0)?;
            }
            Ok(())
        })?;
        write_tree(&mut w, self.tr.tree(), &mut |w, e: &TransitionPointRef| {
            w.u32(e.transition.0)?;
            w.u8(match e.kind {
                EndpointKind::Origin => 0,
                EndpointKind::Destination => 1,
            })?;
            w.point(&e.location)
        })?;
        w.finish()
    }

    /// Read a dataset snapshot back.
    pub fn load(path: &Path) -> Result<Self> {
        let mut r = Source::new(BufReader::new(File::open(path)?));
        let mut magic = [0u8; 4];
        r.bytes(&mut magic)?;
        if &magic != INDEX_MAGIC {
            return Err(Error::Snapshot("not a dataset snapshot".into()));
        }
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
        }
        let frame = Frame::new(r.f64()?, r.f64()?);

        let route_count = r.u32()? as usize;
        let mut routes = Vec::with_capacity(route_count);
        let mut route_names = Vec::with_capacity(route_count);
        for _ in 0..route_count {
            let id = RouteId(r.u32()?);
            let name = r.str()?;
            let n = r.u32()? as usize;
            if n < 2 {
                return Err(Error::Snapshot(format!("route {name:?} has {n} stops")));
            }
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push(r.point()?);
            }
            routes.push(Route::new(id, points));
            route_names.push(name);
        }

        let name_count = r.u32()? as usize;
        let mut transition_names = BTreeMap::new();
        for _ in 0..name_count {
            let id = TransitionId(r.u32()?);
            let name = r.str()?;
            if transition_names.insert(id, name).is_some() {
                return Err(Error::Snapshot(format!("transition {id} is named twice")));
            }
        }

        let rr_tree = read_tree(&mut r, &mut |r| {
            let location = r.point()?;
            let n = r.u32()? as usize;
            let mut ids = Vec::with_capacity(n);
            for _ in 0..n {
                ids.push(RouteId(r.u32()?));
            }
            Ok(StopEntry { location, routes: ids })
        })?;
        let tr_tree = read_tree(&mut r, &mut |r| {
            let transition = TransitionId(r.u32()?);
            let kind = match r.u8()? {
                0 => EndpointKind::Origin,
                1 => EndpointKind::Destination,
                k => return Err(Error::Snapshot(format!("bad endpoint kind tag {k}"))),
            };
            Ok(TransitionPointRef { transition, kind, location: r.point()? })
        })?;
        r.finish()?;

        let rr = RrTree::from_tree(rr_tree);
        let tr = TrTree::from_tree(tr_tree)?;

        // Cross-checks between the sections.
        let distinct: std::collections::BTreeSet<_> = routes
            .iter()
            .flat_map(|r| r.points.iter().map(crate::geometry::PointKey::of))
            .collect();
        if distinct.len() != rr.stop_count() {
            return Err(Error::Snapshot(format!(
                "route list has {} distinct stops, stop tree has {}",
                distinct.len(),
                rr.stop_count()
            )));
        }
        if transition_names.len() != tr.transition_count()
            || transition_names.keys().any(|id| !tr.contains(*id))
        {
            return Err(Error::Snapshot(
                "transition names do not match the endpoint tree".into(),
            ));
        }

        let graph = build_graph(&routes)?;
        Ok(Engine { frame, routes, route_names, rr, tr, transition_names, graph })
    }
}

/// Write a precomputation to its own snapshot (they are per-`k`, and large).
pub fn save_precomputed(path: &Path, pre: &Precomputed) -> Result<()> {
    let mut w = Sink::new(BufWriter::new(File::create(path)?));
    w.bytes(PRECOMP_MAGIC)?;
    w.u32(PRECOMP_VERSION)?;
    w.u32(pre.k)?;
    w.u32(pre.sets.len() as u32)?;
    for set in &pre.sets {
        w.u32(set.len() as u32)?;
        for e in set.iter() {
            w.u32(e.transition.0)?;
            w.u8(match e.kind {
                EndpointKind::Origin => 0,
                EndpointKind::Destination => 1,
            })?;
        }
    }
    debug_assert_eq!(pre.m_psi.n(), pre.sets.len());
    for &d in pre.m_psi.raw() {
        w.f64(d)?;
    }
    w.finish()
}

/// Read a precomputation back, validating it covers exactly
/// `expected_vertices`.
pub fn load_precomputed(path: &Path, expected_vertices: usize) -> Result<Precomputed> {
    let mut r = Source::new(BufReader::new(File::open(path)?));
    let mut magic = [0u8; 4];
    r.bytes(&mut magic)?;
    if &magic != PRECOMP_MAGIC {
        return Err(Error::Snapshot("not a precomputation snapshot".into()));
    }
    let version = r.u32()?;
    if version != PRECOMP_VERSION {
        return Err(Error::Snapshot(format!("unsupported precomputation version {version}")));
    }
    let k = r.u32()?;
    let n = r.u32()? as usize;
    if n != expected_vertices {
        return Err(Error::Snapshot(format!(
            "precomputation covers {n} vertices, the graph has {expected_vertices}"
        )));
    }
    let mut sets = Vec::with_capacity(n);
    for _ in 0..n {
        let m = r.u32()? as usize;
        let mut refs = Vec::with_capacity(m);
        for _ in 0..m {
            let transition = TransitionId(r.u32()?);
            let kind = match r.u8()? {
                0 => EndpointKind::Origin,
                1 => EndpointKind::Destination,
                t => return Err(Error::Snapshot(format!("bad endpoint kind tag {t}"))),
            };
            refs.push(EndpointRef { transition, kind });
        }
        sets.push(EndpointSet::from_refs(refs));
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        data.push(r.f64()?);
    }
    r.finish()?;
    Ok(Precomputed { k, sets, m_psi: DistMatrix::from_raw(n, data) })
}

/// Serialize a tree in depth-first pre-order, remapping arena slots to
/// 0-based depth-first ids so the layout is canonical regardless of the
/// tree's mutation history.
fn write_tree<E, W, F>(w: &mut Sink<W>, tree: &RTree<E>, entry: &mut F) -> Result<()>
where
    E: crate::index::PointEntry,
    W: Write,
    F: FnMut(&mut Sink<W>, &E) -> Result<()>,
{
    let order = tree.dfs_order();
    let remap: std::collections::HashMap<usize, u32> =
        order.iter().enumerate().map(|(new, &old)| (old, new as u32)).collect();
    w.u32(order.len() as u32)?;
    for &id in &order {
        let node = tree.node(id);
        w.point(&node.mbr.min)?;
        w.point(&node.mbr.max)?;
        match &node.kind {
            NodeKind::Leaf(entries) => {
                w.u8(0)?;
                w.u32(entries.len() as u32)?;
                for e in entries {
                    entry(w, e)?;
                }
            }
            NodeKind::Inner(children) => {
                w.u8(1)?;
                w.u32(children.len() as u32)?;
                for c in children {
                    w.u32(remap[c])?;
                }
            }
        }
    }
    Ok(())
}

/// Inverse of [`write_tree`].  Depth-first pre-order means every child id
/// must point past its parent, which rules out cycles and dangling slots.
fn read_tree<E, R, F>(r: &mut Source<R>, entry: &mut F) -> Result<RTree<E>>
where
    E: crate::index::PointEntry,
    R: Read,
    F: FnMut(&mut Source<R>) -> Result<E>,
{
    let count = r.u32()? as usize;
    let mut nodes = Vec::with_capacity(count.min(1 << 20));
    for at in 0..count {
        let mbr = Mbr::new(r.point()?, r.point()?);
        let kind = match r.u8()? {
            0 => {
                let n = r.u32()? as usize;
                let mut entries = Vec::with_capacity(n.min(1 << 20));
                for _ in 0..n {
                    entries.push(entry(r)?);
                }
                NodeKind::Leaf(entries)
            }
            1 => {
                let n = r.u32()? as usize;
                let mut children = Vec::with_capacity(n.min(1 << 20));
                for _ in 0..n {
                    let c = r.u32()? as usize;
                    if c <= at || c >= count {
                        return Err(Error::Snapshot(format!(
                            "node {at} points at node {c} (of {count})"
                        )));
                    }
                    children.push(c);
                }
                NodeKind::Inner(children)
            }
            t => return Err(Error::Snapshot(format!("bad node kind tag {t}"))),
        };
        nodes.push(Node { mbr, kind });
    }
    Ok(RTree::from_dfs(nodes))
}

/// Little-endian binary writer.
struct Sink<W: Write> {
    out: W,
}

impl<W: Write> Sink<W> {
    fn new(out: W) -> Self {
        Sink { out }
    }

    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.out.write_all(b)?)
    }

    fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    fn u32(&mut self, v: u32) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_bits().to_le_bytes())
    }

    fn point(&mut self, p: &GeoPoint) -> Result<()> {
        self.f64(p.x)?;
        self.f64(p.y)
    }

    fn str(&mut self, s: &str) -> Result<()> {
        self.u32(s.len() as u32)?;
        self.bytes(s.as_bytes())
    }

    fn finish(mut self) -> Result<()> {
        Ok(self.out.flush()?)
    }
}

/// Little-endian binary reader.
struct Source<R: Read> {
    input: R,
}

impl<R: Read> Source<R> {
    fn new(input: R) -> Self {
        Source { input }
    }

    fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        Ok(self.input.read_exact(buf)?)
    }

    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.bytes(&mut b)?;
        Ok(b[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(f64::from_bits(u64::from_le_bytes(b)))
    }

    fn point(&mut self) -> Result<GeoPoint> {
        let x = self.f64()?;
        let y = self.f64()?;
        Ok(GeoPoint::new(x, y))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        if n > 1 << 20 {
            return Err(Error::Snapshot(format!("implausible string length {n}")));
        }
        let mut buf = vec![0u8; n];
        self.bytes(&mut buf)?;
        String::from_utf8(buf).map_err(|_| Error::Snapshot("string is not UTF-8".into()))
    }

    /// Consume the reader, checking nothing trails the last section.
    fn finish(mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.input.read(&mut b)? {
            0 => Ok(()),
            _ => Err(Error::Snapshot("trailing bytes after the last section".into())),
        }
    }
}
