//! Newest-vertex bisection forest with hanging nodes.
//!
//! A [`MeshForest`] keeps every node and element ever created (ids are
//! append-only); the current partition is the set of alive leaves. Besides the
//! element tree, the forest tracks the binary tree of edge bisections: every
//! segment knows the segment it was split from and the midpoint it was split
//! at, which is what makes hanging nodes and their global index `λ` cheap to
//! maintain.
//!
//! Geometric predicates run on an integer lattice: root coordinates are
//! snapped to a dyadic grid with ample headroom, and each midpoint is the exact
//! integer average of its edge endpoints, so collinearity tests never need a
//! tolerance.

use std::collections::{BTreeSet, HashMap};

use crate::error::{AvemError, Result};
use crate::geometry::{self, Point};

mod io;
mod overlay;
mod refine;
mod svg;

pub use io::{parse_mesh, write_mesh, MESH_FORMAT_VERSION};
pub use overlay::overlay;
pub use refine::{ChainReport, RefineReport, UNBOUNDED};
pub use svg::{heat_color, SvgOptions};

pub type NodeId = usize;
pub type ElemId = usize;

pub(crate) type SegKey = (NodeId, NodeId);

#[inline]
pub(crate) fn seg(a: NodeId, b: NodeId) -> SegKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

const BASE_BITS: i32 = 24;
const HEADROOM_BITS: u32 = 37;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Proper,
    Hanging,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub xy: Point,
    pub status: NodeStatus,
    /// Endpoints of the edge whose bisection created this node; `None` for root nodes.
    pub parents: Option<[NodeId; 2]>,
    /// Global index: 0 for proper nodes, `max(λ(parents)) + 1` for hanging ones.
    pub lambda: u32,
    pub on_boundary: bool,
    pub(crate) ixy: [i64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElementRecord {
    pub id: ElemId,
    /// Counterclockwise corners; `corners[0]` is the newest vertex.
    pub corners: [NodeId; 3],
    pub level: u32,
    pub parent: Option<ElemId>,
    pub children: Option<[ElemId; 2]>,
    pub alive: bool,
}

impl ElementRecord {
    #[inline]
    pub fn newest_vertex(&self) -> NodeId {
        self.corners[0]
    }

    /// The edge opposite the newest vertex.
    #[inline]
    pub fn refinement_edge(&self) -> [NodeId; 2] {
        [self.corners[1], self.corners[2]]
    }

    /// The three sides as consecutive counterclockwise corner pairs.
    pub fn sides(&self) -> [[NodeId; 2]; 3] {
        let [a, b, c] = self.corners;
        [[a, b], [b, c], [c, a]]
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Segment {
    pub(crate) parent: Option<SegKey>,
    pub(crate) midpoint: Option<NodeId>,
    pub(crate) boundary: bool,
    /// Alive elements having this segment as one of their triangle sides.
    pub(crate) sides: Vec<ElemId>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct CoordFrame {
    origin: Point,
    scale: f64,
}

impl CoordFrame {
    fn from_points(points: &[Point]) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(AvemError::InvalidMesh(format!("non-finite coordinate {p:?}")));
            }
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if !(extent > 0.0) {
            return Err(AvemError::InvalidMesh("root nodes span no area".into()));
        }
        let exp = BASE_BITS - extent.log2().ceil() as i32;
        Ok(Self { origin: lo, scale: 2f64.powi(exp) })
    }

    fn snap(&self, p: Point) -> [i64; 2] {
        let lift = |v: f64, o: f64| ((v - o) * self.scale).round() as i64 * (1i64 << HEADROOM_BITS);
        [lift(p[0], self.origin[0]), lift(p[1], self.origin[1])]
    }
}

/// The bisection forest over a conforming root triangulation together with
/// its current partition.
#[derive(Clone, Debug)]
pub struct MeshForest {
    nodes: Vec<NodeRecord>,
    elements: Vec<ElementRecord>,
    roots: Vec<ElemId>,
    segments: HashMap<SegKey, Segment>,
    dependents: Vec<Vec<NodeId>>,
    n_alive: usize,
    frame: CoordFrame,
}

#[inline]
fn icross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i128 {
    let (ax, ay) = (a[0] as i128 - o[0] as i128, a[1] as i128 - o[1] as i128);
    let (bx, by) = (b[0] as i128 - o[0] as i128, b[1] as i128 - o[1] as i128);
    ax * by - ay * bx
}

#[inline]
fn idot(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i128 {
    let (ax, ay) = (a[0] as i128 - o[0] as i128, a[1] as i128 - o[1] as i128);
    let (bx, by) = (b[0] as i128 - o[0] as i128, b[1] as i128 - o[1] as i128);
    ax * bx + ay * by
}

impl MeshForest {
    /// Builds the forest from a conforming root triangulation.
    ///
    /// Triangles are reoriented counterclockwise and labeled with the newest
    /// vertex opposite the longest side (ties go to the smallest node id).
    pub fn new(points: Vec<Point>, triangles: Vec<[NodeId; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(AvemError::InvalidMesh("no root triangles".into()));
        }
        let frame = CoordFrame::from_points(&points)?;
        let nodes: Vec<NodeRecord> = points
            .iter()
            .enumerate()
            .map(|(id, &xy)| NodeRecord {
                id,
                xy,
                status: NodeStatus::Proper,
                parents: None,
                lambda: 0,
                on_boundary: false,
                ixy: frame.snap(xy),
            })
            .collect();
        let mut elements = Vec::with_capacity(triangles.len());
        for (id, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&n| n >= nodes.len()) {
                return Err(AvemError::InvalidMesh(format!("triangle {id} references a missing node")));
            }
            let [a, b, c] = *tri;
            let orient = icross(nodes[a].ixy, nodes[b].ixy, nodes[c].ixy);
            if orient == 0 {
                return Err(AvemError::InvalidMesh(format!("triangle {id} is degenerate")));
            }
            let ccw = if orient > 0 { [a, b, c] } else { [a, c, b] };
            // Longest side, measured exactly on the lattice.
            let len2 = |p: NodeId, q: NodeId| idot(nodes[p].ixy, nodes[q].ixy, nodes[q].ixy);
            let opposite = [len2(ccw[1], ccw[2]), len2(ccw[2], ccw[0]), len2(ccw[0], ccw[1])];
            let longest = *opposite.iter().max().unwrap();
            let nv_slot = (0..3)
                .filter(|&k| opposite[k] == longest)
                .min_by_key(|&k| ccw[k])
                .unwrap();
            let corners = [ccw[nv_slot], ccw[(nv_slot + 1) % 3], ccw[(nv_slot + 2) % 3]];
            elements.push(ElementRecord {
                id,
                corners,
                level: 0,
                parent: None,
                children: None,
                alive: true,
            });
        }
        let mut mesh = Self {
            roots: (0..elements.len()).collect(),
            n_alive: elements.len(),
            dependents: vec![Vec::new(); nodes.len()],
            nodes,
            elements,
            segments: HashMap::new(),
            frame,
        };
        mesh.rebuild_indices()?;
        mesh.check_root_conformity()?;
        Ok(mesh)
    }

    /// Recomputes segment trees, side incidences, boundary flags and node
    /// dependents from the node and element tables.
    pub(crate) fn rebuild_indices(&mut self) -> Result<()> {
        self.segments.clear();
        for deps in &mut self.dependents {
            deps.clear();
        }
        self.dependents.resize(self.nodes.len(), Vec::new());
        let mut root_count: HashMap<SegKey, usize> = HashMap::new();
        for &r in &self.roots {
            for [a, b] in self.elements[r].sides() {
                *root_count.entry(seg(a, b)).or_default() += 1;
            }
        }
        for (&key, &count) in &root_count {
            if count > 2 {
                return Err(AvemError::InvalidMesh(format!("edge {key:?} shared by {count} root triangles")));
            }
            self.segments.insert(key, Segment { boundary: count == 1, ..Default::default() });
        }
        let root_boundary: BTreeSet<NodeId> = root_count
            .iter()
            .filter(|(_, &c)| c == 1)
            .flat_map(|(&(a, b), _)| [a, b])
            .collect();
        for id in 0..self.nodes.len() {
            match self.nodes[id].parents {
                None => self.nodes[id].on_boundary = root_boundary.contains(&id),
                Some([p, q]) => {
                    if p >= id || q >= id {
                        return Err(AvemError::InvalidMesh(format!("node {id} precedes its parents")));
                    }
                    let key = seg(p, q);
                    let parent_seg = self.segments.entry(key).or_default();
                    parent_seg.midpoint = Some(id);
                    let boundary = parent_seg.boundary;
                    for half in [seg(p, id), seg(id, q)] {
                        let s = self.segments.entry(half).or_default();
                        s.parent = Some(key);
                        s.boundary = boundary;
                    }
                    self.nodes[id].on_boundary = boundary;
                    self.dependents[p].push(id);
                    self.dependents[q].push(id);
                }
            }
        }
        self.n_alive = 0;
        for e in 0..self.elements.len() {
            if self.elements[e].alive {
                self.n_alive += 1;
                for [a, b] in self.elements[e].sides() {
                    self.segments.entry(seg(a, b)).or_default().sides.push(e);
                }
            }
        }
        Ok(())
    }

    fn check_root_conformity(&self) -> Result<()> {
        // No root vertex may sit inside a root side.
        for &r in &self.roots {
            for [a, b] in self.elements[r].sides() {
                let (pa, pb) = (self.nodes[a].ixy, self.nodes[b].ixy);
                for node in &self.nodes {
                    if node.id != a && node.id != b && strictly_inside(pa, pb, node.ixy) {
                        return Err(AvemError::InvalidMesh(format!(
                            "root triangulation is not conforming: node {} lies on edge ({a}, {b})",
                            node.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn elements(&self) -> &[ElementRecord] {
        &self.elements
    }

    pub fn roots(&self) -> &[ElemId] {
        &self.roots
    }

    pub fn node(&self, id: NodeId) -> &NodeRecord {
        &self.nodes[id]
    }

    pub fn element(&self, id: ElemId) -> &ElementRecord {
        &self.elements[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Number of elements in the current partition.
    pub fn num_alive(&self) -> usize {
        self.n_alive
    }

    pub fn alive_elements(&self) -> impl Iterator<Item = ElemId> + '_ {
        self.elements.iter().filter(|e| e.alive).map(|e| e.id)
    }

    pub fn is_alive(&self, e: ElemId) -> bool {
        self.elements.get(e).is_some_and(|r| r.alive)
    }

    fn require_alive(&self, e: ElemId) -> Result<()> {
        match self.elements.get(e) {
            None => Err(AvemError::UnknownElement(e)),
            Some(r) if !r.alive => Err(AvemError::ElementNotAlive(e)),
            Some(_) => Ok(()),
        }
    }

    /// Maximal global index over all nodes of the partition.
    pub fn global_index(&self) -> u32 {
        self.nodes.iter().map(|n| n.lambda).max().unwrap_or(0)
    }

    pub fn is_admissible(&self, max_index: u32) -> bool {
        self.global_index() <= max_index
    }

    pub fn corner_points(&self, e: ElemId) -> [Point; 3] {
        self.elements[e].corners.map(|n| self.nodes[n].xy)
    }

    pub fn area(&self, e: ElemId) -> f64 {
        geometry::signed_area(self.corner_points(e))
    }

    /// `h_E = |E|^{1/2}`.
    pub fn diameter(&self, e: ElemId) -> f64 {
        self.area(e).sqrt()
    }

    /// Counterclockwise nodes on the boundary of `e`, starting at the newest
    /// vertex and including hanging nodes.
    pub fn element_boundary(&self, e: ElemId) -> Result<Vec<NodeId>> {
        self.require_alive(e)?;
        Ok(self.boundary_nodes(e))
    }

    pub(crate) fn boundary_nodes(&self, e: ElemId) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(4);
        for [a, b] in self.elements[e].sides() {
            out.push(a);
            self.collect_side_nodes(a, b, &mut out);
        }
        out
    }

    /// Appends the nodes strictly inside segment `a -> b`, ordered from `a` to `b`.
    fn collect_side_nodes(&self, a: NodeId, b: NodeId, out: &mut Vec<NodeId>) {
        if let Some(m) = self.segments.get(&seg(a, b)).and_then(|s| s.midpoint) {
            self.collect_side_nodes(a, m, out);
            out.push(m);
            self.collect_side_nodes(m, b, out);
        }
    }

    /// Coordinates of [`Self::element_boundary`].
    pub fn polygon(&self, e: ElemId) -> Vec<Point> {
        self.boundary_nodes(e).into_iter().map(|n| self.nodes[n].xy).collect()
    }

    /// Edges of the polygon view of `e`: consecutive pairs of [`Self::element_boundary`].
    pub fn element_edges(&self, e: ElemId) -> Result<Vec<[NodeId; 2]>> {
        let nodes = self.element_boundary(e)?;
        let n = nodes.len();
        Ok((0..n).map(|i| [nodes[i], nodes[(i + 1) % n]]).collect())
    }

    /// The alive element on the other side of the polygon edge `p -> q` of `e`,
    /// or `None` on the domain boundary.
    pub fn neighbor_across(&self, e: ElemId, p: NodeId, q: NodeId) -> Option<ElemId> {
        let mut key = Some(seg(p, q));
        while let Some(k) = key {
            let s = self.segments.get(&k)?;
            if let Some(&other) = s.sides.iter().find(|&&x| x != e) {
                return Some(other);
            }
            key = s.parent;
        }
        None
    }

    pub fn midpoint_of(&self, a: NodeId, b: NodeId) -> Option<NodeId> {
        self.segments.get(&seg(a, b)).and_then(|s| s.midpoint)
    }

    /// Whether segment `key` or one of its ancestors is a side of an alive
    /// element other than `exclude`, i.e. whether a point strictly inside
    /// `key` would be hanging.
    fn covered(&self, key: SegKey, exclude: Option<ElemId>) -> bool {
        let mut cur = Some(key);
        while let Some(k) = cur {
            let Some(s) = self.segments.get(&k) else { return false };
            if s.sides.iter().any(|&x| Some(x) != exclude) {
                return true;
            }
            cur = s.parent;
        }
        false
    }

    fn status_and_lambda(&self, x: NodeId) -> (NodeStatus, u32) {
        match self.nodes[x].parents {
            Some([p, q]) if self.covered(seg(p, q), None) => {
                let l = self.nodes[p].lambda.max(self.nodes[q].lambda).saturating_add(1);
                (NodeStatus::Hanging, l)
            }
            _ => (NodeStatus::Proper, 0),
        }
    }

    /// Newest-vertex bisection of one alive element. Returns the two children.
    pub fn bisect(&mut self, e: ElemId) -> Result<[ElemId; 2]> {
        self.require_alive(e)?;
        let [n, a, b] = self.elements[e].corners;
        let key = seg(a, b);
        let m = match self.segments[&key].midpoint {
            Some(m) => m,
            None => self.create_midpoint(a, b)?,
        };

        for [p, q] in self.elements[e].sides() {
            if let Some(s) = self.segments.get_mut(&seg(p, q)) {
                s.sides.retain(|&x| x != e);
            }
        }
        let level = self.elements[e].level + 1;
        let c1 = self.elements.len();
        let c2 = c1 + 1;
        for (id, corners) in [(c1, [m, n, a]), (c2, [m, b, n])] {
            self.elements.push(ElementRecord {
                id,
                corners,
                level,
                parent: Some(e),
                children: None,
                alive: true,
            });
            for [p, q] in self.elements[id].sides() {
                self.segments.entry(seg(p, q)).or_default().sides.push(id);
            }
        }
        let rec = &mut self.elements[e];
        rec.alive = false;
        rec.children = Some([c1, c2]);
        self.n_alive += 1;

        let mut touched = vec![m];
        self.collect_subtree_nodes(key, &mut touched);
        self.propagate_lambda(touched);
        Ok([c1, c2])
    }

    fn create_midpoint(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (pa, pb) = (self.nodes[a].ixy, self.nodes[b].ixy);
        let sum = [pa[0] + pb[0], pa[1] + pb[1]];
        if sum[0] % 2 != 0 || sum[1] % 2 != 0 {
            return Err(AvemError::ResolutionExhausted(a, b));
        }
        let key = seg(a, b);
        let boundary = self.segments[&key].boundary;
        let m = self.nodes.len();
        self.nodes.push(NodeRecord {
            id: m,
            xy: geometry::midpoint(self.nodes[a].xy, self.nodes[b].xy),
            status: NodeStatus::Proper,
            parents: Some([a, b]),
            lambda: 0,
            on_boundary: boundary,
            ixy: [sum[0] / 2, sum[1] / 2],
        });
        self.dependents.push(Vec::new());
        self.dependents[a].push(m);
        self.dependents[b].push(m);
        self.segments.get_mut(&key).unwrap().midpoint = Some(m);
        for half in [seg(a, m), seg(m, b)] {
            let s = self.segments.entry(half).or_default();
            s.parent = Some(key);
            s.boundary = boundary;
        }
        Ok(m)
    }

    fn collect_subtree_nodes(&self, key: SegKey, out: &mut Vec<NodeId>) {
        if let Some(m) = self.segments.get(&key).and_then(|s| s.midpoint) {
            out.push(m);
            self.collect_subtree_nodes(seg(key.0, m), out);
            self.collect_subtree_nodes(seg(m, key.1), out);
        }
    }

    /// Recomputes status and `λ` of `seeds` and of every node depending on a
    /// node whose value changed. Parents always have smaller ids, so processing
    /// in id order visits each node after its parents.
    fn propagate_lambda(&mut self, seeds: Vec<NodeId>) {
        let mut forced: BTreeSet<NodeId> = seeds.into_iter().collect();
        let mut work = forced.clone();
        while let Some(x) = work.pop_first() {
            let (status, lambda) = self.status_and_lambda(x);
            let node = &mut self.nodes[x];
            let changed = node.status != status || node.lambda != lambda;
            node.status = status;
            node.lambda = lambda;
            if changed || forced.remove(&x) {
                work.extend(self.dependents[x].iter().copied());
            }
        }
    }

    /// The global index that `moe(e)` would carry if `e` alone were bisected.
    pub fn prospective_lambda(&self, e: ElemId) -> Result<u32> {
        self.require_alive(e)?;
        let [a, b] = self.elements[e].refinement_edge();
        Ok(if self.covered(seg(a, b), Some(e)) {
            self.nodes[a].lambda.max(self.nodes[b].lambda).saturating_add(1)
        } else {
            0
        })
    }

    /// The unique alive element whose side contains the whole refinement edge
    /// of `e`, if any.
    pub fn facing_element(&self, e: ElemId) -> Result<Option<ElemId>> {
        self.require_alive(e)?;
        let [a, b] = self.elements[e].refinement_edge();
        let key = seg(a, b);
        if self.segments[&key].midpoint.is_some() {
            return Ok(None);
        }
        let mut cur = Some(key);
        while let Some(k) = cur {
            let s = &self.segments[&k];
            if let Some(&other) = s.sides.iter().find(|&&x| x != e) {
                return Ok(Some(other));
            }
            cur = s.parent;
        }
        Ok(None)
    }

    /// The segment shared by two alive elements, as lattice points of the
    /// two sides involved.
    fn shared_line(&self, e1: ElemId, e2: ElemId) -> Option<([i64; 2], [i64; 2])> {
        if e1 == e2 {
            return None;
        }
        for [a, b] in self.elements[e1].sides() {
            let (pa, pb) = (self.nodes[a].ixy, self.nodes[b].ixy);
            for [c, d] in self.elements[e2].sides() {
                let (pc, pd) = (self.nodes[c].ixy, self.nodes[d].ixy);
                if icross(pa, pb, pc) != 0 || icross(pa, pb, pd) != 0 {
                    continue;
                }
                let len = idot(pa, pb, pb);
                let (tc, td) = (idot(pa, pb, pc), idot(pa, pb, pd));
                let lo = tc.min(td).max(0);
                let hi = tc.max(td).min(len);
                if lo < hi {
                    return Some((pa, pb));
                }
            }
        }
        None
    }

    pub fn adjacent(&self, e1: ElemId, e2: ElemId) -> bool {
        self.shared_line(e1, e2).is_some()
    }

    /// Two adjacent elements are compatible when neither newest vertex lies on
    /// the line through their shared edge.
    pub fn compatible(&self, e1: ElemId, e2: ElemId) -> Result<bool> {
        self.require_alive(e1)?;
        self.require_alive(e2)?;
        let (pa, pb) = self.shared_line(e1, e2).ok_or(AvemError::NotAdjacent(e1, e2))?;
        let on_line = |e: ElemId| icross(pa, pb, self.nodes[self.elements[e].newest_vertex()].ixy) == 0;
        Ok(!on_line(e1) && !on_line(e2))
    }

    /// Whether node `x` lies strictly inside the segment between nodes `a` and `b`.
    pub fn node_strictly_inside(&self, x: NodeId, a: NodeId, b: NodeId) -> bool {
        strictly_inside(self.nodes[a].ixy, self.nodes[b].ixy, self.nodes[x].ixy)
    }

    /// Exact lattice coordinates used by the geometric predicates.
    pub fn lattice_point(&self, x: NodeId) -> [i64; 2] {
        self.nodes[x].ixy
    }

    /// The closest ancestor-or-self of `e` that is alive in `snapshot`, and the
    /// number of bisections separating the two.
    pub fn bisections_from(&self, snapshot: &MeshForest, e: ElemId) -> Option<u32> {
        let mut cur = e;
        loop {
            if snapshot.elements.get(cur).is_some_and(|r| r.alive) {
                return Some(self.elements[e].level - self.elements[cur].level);
            }
            cur = self.elements[cur].parent?;
        }
    }

    /// Sum of element areas over the current partition.
    pub fn total_area(&self) -> f64 {
        self.alive_elements().map(|e| self.area(e)).sum()
    }

    pub(crate) fn frame(&self) -> CoordFrame {
        self.frame
    }

    pub(crate) fn from_parts(
        nodes: Vec<NodeRecord>,
        elements: Vec<ElementRecord>,
        frame: CoordFrame,
    ) -> Result<Self> {
        let roots = elements.iter().filter(|e| e.parent.is_none()).map(|e| e.id).collect();
        let mut mesh = Self {
            dependents: vec![Vec::new(); nodes.len()],
            nodes,
            elements,
            roots,
            segments: HashMap::new(),
            n_alive: 0,
            frame,
        };
        mesh.rebuild_indices()?;
        Ok(mesh)
    }
}

fn strictly_inside(a: [i64; 2], b: [i64; 2], x: [i64; 2]) -> bool {
    if icross(a, b, x) != 0 {
        return false;
    }
    let t = idot(a, b, x);
    t > 0 && t < idot(a, b, b)
}
