//! Arena-backed R-tree over point entries.
//!
//! Both indexes in this crate store points (route stops, transition
//! endpoints), so the tree is specialized to point entries: leaf boxes
//! degenerate from aggregation, never from extended geometry.  Nodes live
//! in a single arena `Vec`; removal may orphan slots, which stay unreferenced
//! until the next bulk rebuild — the structures are small relative to the
//! data they index, and queries only ever walk from the root.
//!
//! Construction is a sort-tile-recursive pack (full leaves, uniform depth).
//! Dynamic inserts use the classic quadratic split; removals tighten boxes
//! on the way back up and drop emptied nodes, without rebalancing.  All
//! tie-breaks are positional, so every operation is deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::{min_dist_query_mbr_sq, point_route_dist_sq, GeoPoint, Mbr};

/// Maximum entries per leaf and children per inner node.
pub(crate) const NODE_CAPACITY: usize = 32;
/// Split target: 40 % of capacity, rounded up.
pub(crate) const MIN_FILL: usize = 13;

/// Anything indexable by a single location.
pub(crate) trait PointEntry: Clone {
    fn location(&self) -> GeoPoint;
}

#[derive(Clone, Debug)]
pub(crate) enum NodeKind<E> {
    Leaf(Vec<E>),
    Inner(Vec<usize>),
}

#[derive(Clone, Debug)]
pub(crate) struct Node<E> {
    pub mbr: Mbr,
    pub kind: NodeKind<E>,
}

#[derive(Clone, Debug)]
pub(crate) struct RTree<E> {
    nodes: Vec<Node<E>>,
    root: Option<usize>,
    len: usize,
}

impl<E: PointEntry> RTree<E> {
    pub fn new() -> Self {
        RTree { nodes: Vec::new(), root: None, len: 0 }
    }

    /// Adopt an arena laid out in depth-first pre-order with the root at
    /// slot 0 — the layout a [`dfs_order`](Self::dfs_order)-driven
    /// serialization produces.  The caller guarantees child indices are in
    /// range; the entry count is recomputed here.
    pub fn from_dfs(nodes: Vec<Node<E>>) -> Self {
        let len = nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Leaf(entries) => entries.len(),
                NodeKind::Inner(_) => 0,
            })
            .sum();
        let root = if nodes.is_empty() { None } else { Some(0) };
        RTree { nodes, root, len }
    }

    /// Number of entries currently indexed.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn node(&self, id: usize) -> &Node<E> {
        &self.nodes[id]
    }

    /// Sort-tile-recursive bulk build: sort by x, cut into vertical strips,
    /// sort each strip by y, pack runs of `NODE_CAPACITY`; repeat one level
    /// up on the node centers until a single root remains.
    pub fn bulk(mut entries: Vec<E>) -> Self {
        let len = entries.len();
        if len == 0 {
            return RTree::new();
        }
        let mut tree = RTree { nodes: Vec::new(), root: None, len };

        entries.sort_by(|a, b| {
            let (pa, pb) = (a.location(), b.location());
            pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y))
        });
        let mut level: Vec<usize> = Vec::new();
        for strip in tiles(&mut entries, |e| e.location()) {
            for run in strip.chunks(NODE_CAPACITY) {
                let mbr = Mbr::of_points(run.iter().map(|e| e.location()));
                tree.nodes.push(Node { mbr, kind: NodeKind::Leaf(run.to_vec()) });
                level.push(tree.nodes.len() - 1);
            }
        }

        while level.len() > 1 {
            let mut ids = level;
            ids.sort_by(|&a, &b| {
                let (ca, cb) = (center(&tree.nodes[a].mbr), center(&tree.nodes[b].mbr));
                ca.x.total_cmp(&cb.x).then(ca.y.total_cmp(&cb.y))
            });
            let mut next: Vec<usize> = Vec::new();
            for strip in tiles(&mut ids, |&id| center(&tree.nodes[id].mbr)) {
                for run in strip.chunks(NODE_CAPACITY) {
                    let mut mbr = tree.nodes[run[0]].mbr;
                    for &id in &run[1..] {
                        mbr = mbr.expand(&tree.nodes[id].mbr);
                    }
                    tree.nodes.push(Node { mbr, kind: NodeKind::Inner(run.to_vec()) });
                    next.push(tree.nodes.len() - 1);
                }
            }
            level = next;
        }
        tree.root = Some(level[0]);
        tree
    }

    pub fn insert(&mut self, entry: E) {
        let p = entry.location();
        match self.root {
            None => {
                self.nodes.push(Node { mbr: Mbr::of_point(p), kind: NodeKind::Leaf(vec![entry]) });
                self.root = Some(self.nodes.len() - 1);
            }
            Some(root) => {
                if let Some(sibling) = self.insert_rec(root, entry, p) {
                    let mbr = self.nodes[root].mbr.expand(&self.nodes[sibling].mbr);
                    self.nodes.push(Node { mbr, kind: NodeKind::Inner(vec![root, sibling]) });
                    self.root = Some(self.nodes.len() - 1);
                }
            }
        }
        self.len += 1;
    }

    /// Insert below `id`; a `Some` return is a freshly split-off sibling the
    /// caller must adopt.
    fn insert_rec(&mut self, id: usize, entry: E, p: GeoPoint) -> Option<usize> {
        self.nodes[id].mbr = self.nodes[id].mbr.expand_point(&p);
        match &self.nodes[id].kind {
            NodeKind::Leaf(_) => {
                let NodeKind::Leaf(entries) = &mut self.nodes[id].kind else { unreachable!() };
                entries.push(entry);
                if entries.len() <= NODE_CAPACITY {
                    return None;
                }
                let spill = std::mem::take(entries);
                let (keep, give) = split(&spill, |e| Mbr::of_point(e.location()));
                let assign = |idx: &[usize]| -> Vec<E> {
                    idx.iter().map(|&i| spill[i].clone()).collect()
                };
                let (kept, given) = (assign(&keep), assign(&give));
                self.nodes[id].mbr = Mbr::of_points(kept.iter().map(|e| e.location()));
                self.nodes[id].kind = NodeKind::Leaf(kept);
                let mbr = Mbr::of_points(given.iter().map(|e| e.location()));
                self.nodes.push(Node { mbr, kind: NodeKind::Leaf(given) });
                Some(self.nodes.len() - 1)
            }
            NodeKind::Inner(children) => {
                let pick = choose_child(&self.nodes, children, p);
                let sibling = self.insert_rec(pick, entry, p)?;
                let NodeKind::Inner(children) = &mut self.nodes[id].kind else { unreachable!() };
                children.push(sibling);
                if children.len() <= NODE_CAPACITY {
                    return None;
                }
                let spill = std::mem::take(children);
                let (keep, give) = split(&spill, |&c| self.nodes[c].mbr);
                let kept: Vec<usize> = keep.iter().map(|&i| spill[i]).collect();
                let given: Vec<usize> = give.iter().map(|&i| spill[i]).collect();
                self.nodes[id].mbr = self.cover(&kept);
                self.nodes[id].kind = NodeKind::Inner(kept);
                let mbr = self.cover(&given);
                self.nodes.push(Node { mbr, kind: NodeKind::Inner(given) });
                Some(self.nodes.len() - 1)
            }
        }
    }

    fn cover(&self, ids: &[usize]) -> Mbr {
        let mut mbr = self.nodes[ids[0]].mbr;
        for &id in &ids[1..] {
            mbr = mbr.expand(&self.nodes[id].mbr);
        }
        mbr
    }

    /// Remove the first entry at `p` satisfying `pred`.  Boxes tighten on
    /// the unwind; nodes left empty are unlinked (their arena slots become
    /// garbage until the next bulk build).  No rebalancing: leaves may run
    /// arbitrarily thin.
    pub fn remove_where(&mut self, p: GeoPoint, pred: &dyn Fn(&E) -> bool) -> bool {
        let Some(root) = self.root else { return false };
        if !self.remove_rec(root, p, pred) {
            return false;
        }
        self.len -= 1;
        if node_len(&self.nodes[root]) == 0 {
            self.root = None;
            self.nodes.clear();
        }
        true
    }

    fn remove_rec(&mut self, id: usize, p: GeoPoint, pred: &dyn Fn(&E) -> bool) -> bool {
        if !self.nodes[id].mbr.contains_point(&p) {
            return false;
        }
        match &self.nodes[id].kind {
            NodeKind::Leaf(entries) => {
                let Some(at) = entries.iter().position(pred) else { return false };
                let NodeKind::Leaf(entries) = &mut self.nodes[id].kind else { unreachable!() };
                entries.remove(at);
                if !entries.is_empty() {
                    self.nodes[id].mbr = Mbr::of_points(entries.iter().map(|e| e.location()));
                }
                true
            }
            NodeKind::Inner(children) => {
                let children = children.clone();
                for (slot, &child) in children.iter().enumerate() {
                    if !self.remove_rec(child, p, pred) {
                        continue;
                    }
                    let emptied = node_len(&self.nodes[child]) == 0;
                    let NodeKind::Inner(ch) = &mut self.nodes[id].kind else { unreachable!() };
                    if emptied {
                        ch.remove(slot);
                    }
                    let ch = ch.clone();
                    if !ch.is_empty() {
                        self.nodes[id].mbr = self.cover(&ch);
                    }
                    return true;
                }
                false
            }
        }
    }

    /// Node ids in depth-first order (parents first, children in stored
    /// order): the canonical layout for serialization and per-node tables.
    pub fn dfs_order(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let Some(root) = self.root else { return out };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let NodeKind::Inner(children) = &self.nodes[id].kind {
                stack.extend(children.iter().rev());
            }
        }
        out
    }

    /// Ascending-distance traversal from the point set `query`.  Nodes are
    /// *yielded before expansion*: the consumer decides per node whether to
    /// call [`BestFirst::expand`] or to drop the whole subtree.
    pub fn best_first<'t, 'q>(&'t self, query: &'q [GeoPoint]) -> BestFirst<'t, 'q, E> {
        let mut cursor = BestFirst { tree: self, query, heap: BinaryHeap::new(), seq: 0 };
        if let Some(root) = self.root {
            let key = min_dist_query_mbr_sq(query, &self.nodes[root].mbr);
            cursor.heap.push(Reverse((HeapKey(key), 0, Slot::Node(root))));
        }
        cursor
    }
}

fn node_len<E>(node: &Node<E>) -> usize {
    match &node.kind {
        NodeKind::Leaf(entries) => entries.len(),
        NodeKind::Inner(children) => children.len(),
    }
}

fn center(mbr: &Mbr) -> GeoPoint {
    GeoPoint::new((mbr.min.x + mbr.max.x) / 2.0, (mbr.min.y + mbr.max.y) / 2.0)
}

/// Cut a pre-sorted slice into ⌈√(⌈n/cap⌉)⌉ strips and sort each strip by
/// the orthogonal axis; yields the strips.
fn tiles<T>(items: &mut [T], loc: impl Fn(&T) -> GeoPoint + Copy) -> Vec<&mut [T]> {
    let n = items.len();
    let leaves = n.div_ceil(NODE_CAPACITY);
    let strips = (leaves as f64).sqrt().ceil() as usize;
    let per_strip = n.div_ceil(strips.max(1));
    let mut out = Vec::new();
    for strip in items.chunks_mut(per_strip.max(1)) {
        strip.sort_by(|a, b| {
            let (pa, pb) = (loc(a), loc(b));
            pa.y.total_cmp(&pb.y).then(pa.x.total_cmp(&pb.x))
        });
        out.push(strip);
    }
    out
}

/// Pick the child needing the least area enlargement to take `p`; ties go
/// to the smaller box, then to storage order.
fn choose_child<E>(nodes: &[Node<E>], children: &[usize], p: GeoPoint) -> usize {
    let mut best = children[0];
    let mut best_grow = f64::INFINITY;
    let mut best_area = f64::INFINITY;
    for &c in children {
        let mbr = &nodes[c].mbr;
        let area = mbr.area();
        let grow = mbr.expand_point(&p).area() - area;
        if grow < best_grow || (grow == best_grow && area < best_area) {
            best = c;
            best_grow = grow;
            best_area = area;
        }
    }
    best
}

/// Quadratic split: returns the index partition of `items` into two groups.
/// Seeds maximize wasted area; the rest go one at a time to the group whose
/// box grows least, with forced assignment once a group must take every
/// remaining item to reach `MIN_FILL`.
fn split<T>(items: &[T], mbr_of: impl Fn(&T) -> Mbr) -> (Vec<usize>, Vec<usize>) {
    let n = items.len();
    let mbrs: Vec<Mbr> = items.iter().map(&mbr_of).collect();

    let (mut s1, mut s2) = (0, 1);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let waste = mbrs[i].expand(&mbrs[j]).area() - mbrs[i].area() - mbrs[j].area();
            if waste > worst {
                worst = waste;
                (s1, s2) = (i, j);
            }
        }
    }

    let mut g1 = vec![s1];
    let mut g2 = vec![s2];
    let mut b1 = mbrs[s1];
    let mut b2 = mbrs[s2];
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != s1 && i != s2).collect();

    while !rest.is_empty() {
        if g1.len() + rest.len() == MIN_FILL {
            for i in rest.drain(..) {
                b1 = b1.expand(&mbrs[i]);
                g1.push(i);
            }
            break;
        }
        if g2.len() + rest.len() == MIN_FILL {
            for i in rest.drain(..) {
                b2 = b2.expand(&mbrs[i]);
                g2.push(i);
            }
            break;
        }
        // The classic pick-next: the item with the strongest preference.
        let mut pick = 0;
        let mut pick_gap = f64::NEG_INFINITY;
        for (slot, &i) in rest.iter().enumerate() {
            let d1 = b1.expand(&mbrs[i]).area() - b1.area();
            let d2 = b2.expand(&mbrs[i]).area() - b2.area();
            let gap = (d1 - d2).abs();
            if gap > pick_gap {
                pick_gap = gap;
                pick = slot;
            }
        }
        let i = rest.remove(pick);
        let d1 = b1.expand(&mbrs[i]).area() - b1.area();
        let d2 = b2.expand(&mbrs[i]).area() - b2.area();
        let to_first = match d1.total_cmp(&d2) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => match b1.area().total_cmp(&b2.area()) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => g1.len() <= g2.len(),
            },
        };
        if to_first {
            b1 = b1.expand(&mbrs[i]);
            g1.push(i);
        } else {
            b2 = b2.expand(&mbrs[i]);
            g2.push(i);
        }
    }
    (g1, g2)
}

/// `f64` ordered by `total_cmp` for heap keys.
#[derive(Clone, Copy, Debug, PartialEq)]
struct HeapKey(f64);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    Node(usize),
    Entry(usize, usize),
}

/// What [`BestFirst::next`] hands back.  `dist_sq` is the key the item was
/// ordered by — for a node, the least squared distance from the query point
/// set to its box; consumers that only care about the order may ignore it.
pub(crate) enum Scanned<'t, E> {
    /// A node, *not yet expanded*.
    Node {
        id: usize,
        #[allow(dead_code)] // the ordering key; asserted against in tests
        dist_sq: f64,
    },
    /// An entry from an expanded leaf.
    Entry {
        entry: &'t E,
        #[allow(dead_code)] // the ordering key; asserted against in tests
        dist_sq: f64,
    },
}

/// See [`RTree::best_first`].
pub(crate) struct BestFirst<'t, 'q, E> {
    tree: &'t RTree<E>,
    query: &'q [GeoPoint],
    heap: BinaryHeap<Reverse<(HeapKey, u64, Slot)>>,
    seq: u64,
}

impl<'t, E: PointEntry> BestFirst<'t, '_, E> {
    pub fn next(&mut self) -> Option<Scanned<'t, E>> {
        let Reverse((HeapKey(dist_sq), _, slot)) = self.heap.pop()?;
        Some(match slot {
            Slot::Node(id) => Scanned::Node { id, dist_sq },
            Slot::Entry(leaf, at) => {
                let NodeKind::Leaf(entries) = &self.tree.nodes[leaf].kind else { unreachable!() };
                Scanned::Entry { entry: &entries[at], dist_sq }
            }
        })
    }

    /// Push the children (or entries) of a node previously yielded by
    /// [`next`](Self::next).  Not calling this drops the subtree.
    pub fn expand(&mut self, id: usize) {
        match &self.tree.nodes[id].kind {
            NodeKind::Leaf(entries) => {
                for (at, e) in entries.iter().enumerate() {
                    let key = point_route_dist_sq(&e.location(), self.query);
                    self.seq += 1;
                    self.heap.push(Reverse((HeapKey(key), self.seq, Slot::Entry(id, at))));
                }
            }
            NodeKind::Inner(children) => {
                for &c in children {
                    let key = min_dist_query_mbr_sq(self.query, &self.tree.nodes[c].mbr);
                    self.seq += 1;
                    self.heap.push(Reverse((HeapKey(key), self.seq, Slot::Node(c))));
                }
            }
        }
    }
}
