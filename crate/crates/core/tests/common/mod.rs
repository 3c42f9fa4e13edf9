//! Independent oracles and random generators shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;

use avem::geometry::{self, Affine, Point};
use avem::mesh::NodeStatus;
use avem::vem::PiecewiseConstantData;
use avem::{ElemId, MeshForest, NodeId};
use rand::Rng;

/// Status and global index of every node, recomputed from geometry alone.
///
/// A node is hanging exactly when it lies strictly inside a side of some
/// alive triangle. Nodes inside a side are found by probing dyadic points of
/// the side on the integer lattice: a bisection node at a quarter of a side
/// can only exist if the node at the half exists.
pub fn brute_force_lambda(mesh: &MeshForest) -> Vec<(NodeStatus, u32)> {
    let by_point: HashMap<[i64; 2], NodeId> =
        (0..mesh.num_nodes()).map(|n| (mesh.lattice_point(n), n)).collect();
    let mut hanging = vec![false; mesh.num_nodes()];
    fn probe(by_point: &HashMap<[i64; 2], NodeId>, a: [i64; 2], b: [i64; 2], hanging: &mut [bool]) {
        if (a[0] + b[0]) % 2 != 0 || (a[1] + b[1]) % 2 != 0 {
            return;
        }
        let m = [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2];
        if let Some(&x) = by_point.get(&m) {
            hanging[x] = true;
            probe(by_point, a, m, hanging);
            probe(by_point, m, b, hanging);
        }
    }
    for e in mesh.alive_elements() {
        for [a, b] in mesh.element(e).sides() {
            probe(&by_point, mesh.lattice_point(a), mesh.lattice_point(b), &mut hanging);
        }
    }
    let mut out: Vec<(NodeStatus, u32)> = Vec::with_capacity(mesh.num_nodes());
    for n in 0..mesh.num_nodes() {
        if !hanging[n] {
            out.push((NodeStatus::Proper, 0));
            continue;
        }
        let [p, q] = mesh.node(n).parents.expect("hanging nodes are midpoints");
        assert!(p < n && q < n, "parents precede their midpoint");
        out.push((NodeStatus::Hanging, out[p].1.max(out[q].1) + 1));
    }
    out
}

/// Panics unless the stored node statuses and indices match [`brute_force_lambda`].
pub fn assert_lambda_consistent(mesh: &MeshForest) {
    for (n, (status, lambda)) in brute_force_lambda(mesh).into_iter().enumerate() {
        let node = mesh.node(n);
        assert_eq!((node.status, node.lambda), (status, lambda), "node {n} at {:?}", node.xy);
    }
}

/// A structured `n × n` triangulation of the unit square with interior nodes
/// moved randomly by up to a fifth of the cell size.
pub fn jittered_square(rng: &mut impl Rng, n: usize) -> MeshForest {
    let h = 1.0 / n as f64;
    let mut points = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if i > 0 && i < n && j > 0 && j < n {
                p[0] += rng.gen_range(-0.2..0.2) * h;
                p[1] += rng.gen_range(-0.2..0.2) * h;
            }
            points.push(p);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if rng.gen_bool(0.5) {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            } else {
                triangles.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                triangles.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    MeshForest::new(points, triangles).unwrap()
}

/// Marks a random handful of alive elements.
pub fn random_marks(rng: &mut impl Rng, mesh: &MeshForest, max_marks: usize) -> Vec<ElemId> {
    let alive: Vec<ElemId> = mesh.alive_elements().collect();
    let k = rng.gen_range(1..=max_marks.min(alive.len()));
    (0..k).map(|_| alive[rng.gen_range(0..alive.len())]).collect()
}

/// Refines `mesh` with random marks until it has at least `min_elements`.
pub fn refine_randomly(rng: &mut impl Rng, mesh: &mut MeshForest, min_elements: usize, max_index: u32) {
    while mesh.num_alive() < min_elements {
        let marks = random_marks(rng, mesh, 3);
        mesh.refine(&marks, max_index).unwrap();
    }
}

/// Whether `x` lies in the closed triangle of element `e`.
pub fn contains(mesh: &MeshForest, e: ElemId, x: Point) -> bool {
    let p = mesh.corner_points(e);
    (0..3).all(|k| geometry::cross(geometry::sub(p[(k + 1) % 3], p[k]), geometry::sub(x, p[k])) >= 0.0)
}

/// A triangle with up to three hanging nodes per side at dyadic positions,
/// as a counterclockwise polygon together with the positions of its corners.
pub fn random_polygon(rng: &mut impl Rng) -> (Vec<Point>, [usize; 3]) {
    let tri = loop {
        let t: [Point; 3] = std::array::from_fn(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let area = geometry::signed_area(t);
        if area.abs() > 0.1 {
            break if area > 0.0 { t } else { [t[0], t[2], t[1]] };
        }
    };
    let mut points = Vec::new();
    let mut slots = [0; 3];
    for k in 0..3 {
        slots[k] = points.len();
        let (a, b) = (tri[k], tri[(k + 1) % 3]);
        points.push(a);
        let count = rng.gen_range(0..=3);
        for s in dyadic_splits(rng, count) {
            points.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    (points, slots)
}

/// Interior points of `[0, 1]` produced by `count` random interval bisections.
fn dyadic_splits(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let mut cuts = vec![0.0, 1.0];
    for _ in 0..count {
        let i = rng.gen_range(0..cuts.len() - 1);
        cuts.insert(i + 1, 0.5 * (cuts[i] + cuts[i + 1]));
    }
    cuts[1..cuts.len() - 1].to_vec()
}

/// A random symmetric positive definite tensor with eigenvalues in `[0.5, 3]`.
pub fn random_spd(rng: &mut impl Rng) -> [[f64; 2]; 2] {
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (l1, l2) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
    let (c, s) = (phi.cos(), phi.sin());
    [[l1 * c * c + l2 * s * s, (l1 - l2) * c * s], [(l1 - l2) * c * s, l1 * s * s + l2 * c * c]]
}

/// Random piecewise-constant data with anisotropic diffusion and no reaction.
pub fn random_diffusion(rng: &mut impl Rng, mesh: &MeshForest) -> PiecewiseConstantData {
    PiecewiseConstantData::from_fn(mesh, |_| Ok(avem::vem::ElementData { a: random_spd(rng), c: 0.0, f: 0.0 }))
        .unwrap()
}

/// A continuous function that is affine on every alive triangle: random
/// values at proper nodes, and each hanging node takes the mean of the
/// endpoints of the edge it splits. With `zero_on_boundary` the function
/// vanishes on the domain boundary.
pub fn conforming_affine(rng: &mut impl Rng, mesh: &MeshForest, zero_on_boundary: bool) -> Vec<f64> {
    let mut w = Vec::with_capacity(mesh.num_nodes());
    for n in 0..mesh.num_nodes() {
        let node = mesh.node(n);
        let v = match (node.status, node.parents) {
            (NodeStatus::Hanging, Some([p, q])) => 0.5 * (w[p] + w[q]),
            _ if zero_on_boundary && node.on_boundary => 0.0,
            _ => rng.gen_range(-1.0..1.0),
        };
        w.push(v);
    }
    w
}

/// `∫_Ω A ∇v · ∇w` for `w` affine on every triangle and `v` linear between
/// consecutive boundary nodes of every element: on each element the integral
/// equals `A∇w · ∮ v n`, evaluated with two-point Gauss rules on the polygon
/// edges.
pub fn flux_oracle(mesh: &MeshForest, data: &PiecewiseConstantData, v: &[f64], w: &[f64]) -> f64 {
    let g = 0.5 / 3f64.sqrt();
    let mut total = 0.0;
    for e in mesh.alive_elements() {
        let corners = mesh.element(e).corners;
        let grad_w = Affine::interpolate(mesh.corner_points(e), corners.map(|n| w[n])).gradient;
        let a_grad_w = geometry::tensor_apply(&data.get(e).unwrap().a, grad_w);
        let nodes = mesh.element_boundary(e).unwrap();
        let mut flux = [0.0; 2];
        for i in 0..nodes.len() {
            let (p, q) = (nodes[i], nodes[(i + 1) % nodes.len()]);
            let d = geometry::sub(mesh.node(q).xy, mesh.node(p).xy);
            let mut integral = 0.0;
            for s in [0.5 - g, 0.5 + g] {
                integral += 0.5 * ((1.0 - s) * v[p] + s * v[q]);
            }
            // |e| n_e for a counterclockwise boundary.
            flux[0] += integral * d[1];
            flux[1] -= integral * d[0];
        }
        total += geometry::dot(a_grad_w, flux);
    }
    total
}

/// Minimum-cardinality subset reaching `theta` of the total, by enumeration.
/// Among subsets of that size the one with the largest sum is returned.
pub fn brute_force_dorfler(values: &[(ElemId, f64)], theta: f64) -> Vec<ElemId> {
    let n = values.len();
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut best: Option<(u32, f64, u32)> = None;
    for mask in 1u32..(1 << n) {
        let size = mask.count_ones();
        let sum: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i].1).sum();
        if sum < theta * total {
            continue;
        }
        let better = match best {
            None => true,
            Some((s, b, _)) => size < s || (size == s && sum > b),
        };
        if better {
            best = Some((size, sum, mask));
        }
    }
    let mask = best.expect("the full set always qualifies").2;
    let mut out: Vec<ElemId> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| values[i].0).collect();
    out.sort_unstable();
    out
}
