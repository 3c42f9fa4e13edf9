//! Lowest-order enhanced virtual elements on the polygon view of the mesh.
//!
//! Each alive triangle is treated as a polygon whose vertices are its corners
//! plus every hanging node on its sides. Virtual functions are known through
//! their nodal values only; everything below works with the affine projection
//! `Π∇`, which is computable from those values.

use crate::error::{AvemError, Result};
use crate::geometry::{self, Affine, Point, Tensor};
use crate::mesh::{ElemId, MeshForest, NodeId};
use crate::sparse::CsrMatrix;

/// Constant coefficients on one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementData {
    pub a: Tensor,
    pub c: f64,
    pub f: f64,
}

impl ElementData {
    pub fn isotropic(a: f64, c: f64, f: f64) -> Self {
        Self { a: [[a, 0.0], [0.0, a]], c, f }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.a;
        if a[0][1] != a[1][0] || geometry::sym_eigenvalues(&a)[0] <= 0.0 || !a.iter().flatten().all(|v| v.is_finite())
        {
            return Err(AvemError::NotSpd(a));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) || !self.f.is_finite() {
            return Err(AvemError::DataMismatch(format!("invalid reaction/load pair ({}, {})", self.c, self.f)));
        }
        Ok(())
    }
}

/// Element-wise constant data, indexed by element id.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantData {
    values: Vec<Option<ElementData>>,
}

impl PiecewiseConstantData {
    /// Evaluates `value` on every alive element of `mesh`.
    pub fn from_fn(mesh: &MeshForest, mut value: impl FnMut(ElemId) -> Result<ElementData>) -> Result<Self> {
        let mut values = vec![None; mesh.elements().len()];
        for e in mesh.alive_elements() {
            let d = value(e)?;
            d.validate()?;
            values[e] = Some(d);
        }
        Ok(Self { values })
    }

    pub fn uniform(mesh: &MeshForest, data: ElementData) -> Result<Self> {
        Self::from_fn(mesh, |_| Ok(data))
    }

    pub fn get(&self, e: ElemId) -> Result<&ElementData> {
        self.values
            .get(e)
            .and_then(Option::as_ref)
            .ok_or_else(|| AvemError::DataMismatch(format!("no data on element {e}")))
    }

    pub fn set(&mut self, e: ElemId, data: ElementData) -> Result<()> {
        data.validate()?;
        if self.values.len() <= e {
            self.values.resize(e + 1, None);
        }
        self.values[e] = Some(data);
        Ok(())
    }

    /// Gives every alive element without data the constants of its closest
    /// ancestor that has them.
    pub fn inherit(&mut self, mesh: &MeshForest) -> Result<()> {
        self.values.resize(mesh.elements().len(), None);
        for e in mesh.alive_elements() {
            if self.values[e].is_some() {
                continue;
            }
            let mut cur = mesh.element(e).parent;
            while let Some(p) = cur {
                if let Some(d) = self.values[p] {
                    self.values[e] = Some(d);
                    break;
                }
                cur = mesh.element(p).parent;
            }
            if self.values[e].is_none() {
                return Err(AvemError::DataMismatch(format!("element {e} has no ancestor with data")));
            }
        }
        Ok(())
    }

    /// Checks that every alive element carries data.
    pub fn covers(&self, mesh: &MeshForest) -> Result<()> {
        for e in mesh.alive_elements() {
            self.get(e)?;
        }
        Ok(())
    }
}

/// The affine projection `Π∇` on one polygon, stored as its action on each
/// nodal basis function: `Π∇φ_i(x) = constant[i] + gradient[i] · x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalProjection {
    pub points: Vec<Point>,
    /// Positions of the three triangle corners within `points`.
    pub corner_slots: [usize; 3],
    pub area: f64,
    pub centroid: Point,
    pub gradient: Vec<[f64; 2]>,
    pub constant: Vec<f64>,
}

impl LocalProjection {
    /// `points` is the counterclockwise polygon; the corners must be
    /// non-collinear and every other point must lie on a side.
    pub fn new(points: Vec<Point>, corner_slots: [usize; 3]) -> Result<Self> {
        let n = points.len();
        let tri = corner_slots.map(|k| points[k]);
        let area = geometry::signed_area(tri);
        let scale = (0..3).map(|k| geometry::norm(geometry::sub(tri[k], tri[(k + 1) % 3]))).fold(0.0, f64::max);
        if !(area > 1e-14 * scale * scale) {
            return Err(AvemError::DegenerateElement(area));
        }
        let mut gradient = vec![[0.0; 2]; n];
        let mut weight = vec![0.0; n];
        let mut perimeter = 0.0;
        let mut moment = [0.0; 2];
        for i in 0..n {
            let j = (i + 1) % n;
            let (p, q) = (points[i], points[j]);
            let d = geometry::sub(q, p);
            let len = geometry::norm(d);
            // |e| n_e for a counterclockwise polygon.
            let ln = [d[1], -d[0]];
            for k in [i, j] {
                gradient[k][0] += 0.5 * ln[0] / area;
                gradient[k][1] += 0.5 * ln[1] / area;
                weight[k] += 0.5 * len;
            }
            perimeter += len;
            let m = geometry::midpoint(p, q);
            moment[0] += len * m[0];
            moment[1] += len * m[1];
        }
        let constant = (0..n).map(|i| (weight[i] - geometry::dot(gradient[i], moment)) / perimeter).collect();
        Ok(Self { centroid: geometry::centroid(tri), points, corner_slots, area, gradient, constant })
    }

    pub fn from_mesh(mesh: &MeshForest, e: ElemId) -> Result<(Vec<NodeId>, Self)> {
        let nodes = mesh.element_boundary(e)?;
        let corners = mesh.element(e).corners;
        let slots = corners.map(|c| nodes.iter().position(|&n| n == c).expect("corner on boundary"));
        let points = nodes.iter().map(|&n| mesh.node(n).xy).collect();
        Ok((nodes, Self::new(points, slots)?))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn triangle(&self) -> [Point; 3] {
        self.corner_slots.map(|k| self.points[k])
    }

    pub fn basis(&self, i: usize) -> Affine {
        Affine::new(self.constant[i], self.gradient[i])
    }

    /// `Π∇v` for the virtual function with nodal values `values`.
    pub fn project(&self, values: &[f64]) -> Affine {
        let mut out = Affine::default();
        for (i, &v) in values.iter().enumerate() {
            out.constant += v * self.constant[i];
            out.gradient[0] += v * self.gradient[i][0];
            out.gradient[1] += v * self.gradient[i][1];
        }
        out
    }

    /// Corner interpolant evaluated at every polygon node, as a matrix
    /// `P[i][j]` with `(I_E v)(x_i) = Σ_j P[i][j] v_j`.
    fn interpolation_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let tri = self.triangle();
        let bary: [Affine; 3] = [0, 1, 2].map(|k| {
            let mut vals = [0.0; 3];
            vals[k] = 1.0;
            Affine::interpolate(tri, vals)
        });
        (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                for (k, &slot) in self.corner_slots.iter().enumerate() {
                    row[slot] = bary[k].eval(self.points[i]);
                }
                row
            })
            .collect()
    }

    /// `(v − I_E v)(x_i)` for every node.
    pub fn interpolation_defect(&self, values: &[f64]) -> Vec<f64> {
        let p = self.interpolation_matrix();
        (0..self.len())
            .map(|i| values[i] - p[i].iter().zip(values).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// `|E| (∇Π∇φ_i)ᵀ A (∇Π∇φ_j)`, row-major.
    pub fn stiffness(&self, a: &Tensor) -> Vec<f64> {
        let n = self.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            let ag = geometry::tensor_apply(a, self.gradient[i]);
            for j in 0..n {
                k[i * n + j] = self.area * geometry::dot(ag, self.gradient[j]);
            }
        }
        symmetrize(&mut k, n);
        k
    }

    /// `c ∫_E Π∇φ_i Π∇φ_j`, row-major.
    pub fn mass(&self, c: f64) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        if c == 0.0 {
            return m;
        }
        let tri = self.triangle();
        for i in 0..n {
            for j in i..n {
                let v = c * geometry::integrate_affine_product(tri, &self.basis(i), &self.basis(j));
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        m
    }

    /// `Σ_k (φ_i − I_E φ_i)(x_k) (φ_j − I_E φ_j)(x_k)`, row-major.
    pub fn stabilization(&self) -> Vec<f64> {
        let n = self.len();
        let p = self.interpolation_matrix();
        let d: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n).map(|i| f64::from(u8::from(k == i)) - p[k][i]).collect())
            .collect();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..n).map(|k| d[k][i] * d[k][j]).sum();
                s[i * n + j] = v;
                s[j * n + i] = v;
            }
        }
        s
    }

    /// `f ∫_E Π∇φ_i`.
    pub fn load(&self, f: f64) -> Vec<f64> {
        (0..self.len()).map(|i| f * self.area * self.basis(i).eval(self.centroid)).collect()
    }
}

fn symmetrize(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
}

/// `Π∇v` on a polygon given by its nodes, corner positions and nodal values.
pub fn local_pinabla(points: &[Point], corner_slots: [usize; 3], values: &[f64]) -> Result<Affine> {
    if values.len() != points.len() {
        return Err(AvemError::InvalidParameter("one value per polygon node required".into()));
    }
    Ok(LocalProjection::new(points.to_vec(), corner_slots)?.project(values))
}

/// The Galerkin system restricted to free (interior) nodes.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Free-dof index of each node, `None` for boundary nodes.
    pub dof_of_node: Vec<Option<usize>>,
    pub node_of_dof: Vec<NodeId>,
    /// Prescribed values at boundary nodes.
    pub boundary_values: Vec<Option<f64>>,
}

impl SparseSystem {
    pub fn num_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    /// Nodal values of the full discrete function.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        self.dof_of_node
            .iter()
            .zip(&self.boundary_values)
            .map(|(dof, bv)| match (dof, bv) {
                (Some(k), _) => free[*k],
                (None, Some(v)) => *v,
                (None, None) => 0.0,
            })
            .collect()
    }

    /// Free-dof part of a nodal vector.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&n| nodal.get(n).copied().unwrap_or(0.0)).collect()
    }
}

/// Assembles `a + m + γ S` and the load vector, eliminating boundary nodes
/// with values taken from `dirichlet`.
pub fn assemble(
    mesh: &MeshForest,
    data: &PiecewiseConstantData,
    gamma: f64,
    dirichlet: &dyn Fn(Point) -> f64,
) -> Result<SparseSystem> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(AvemError::InvalidParameter(format!("stabilization parameter must be positive, got {gamma}")));
    }
    data.covers(mesh)?;
    let n_nodes = mesh.num_nodes();
    let mut dof_of_node = vec![None; n_nodes];
    let mut boundary_values = vec![None; n_nodes];
    let mut node_of_dof = Vec::new();
    for node in mesh.nodes() {
        if node.on_boundary {
            boundary_values[node.id] = Some(dirichlet(node.xy));
        } else {
            dof_of_node[node.id] = Some(node_of_dof.len());
            node_of_dof.push(node.id);
        }
    }
    let n = node_of_dof.len();
    let mut triplets = Vec::with_capacity(mesh.num_alive() * 16);
    let mut rhs = vec![0.0; n];
    for e in mesh.alive_elements() {
        let d = data.get(e)?;
        let (nodes, proj) = LocalProjection::from_mesh(mesh, e)?;
        let k = nodes.len();
        let a = proj.stiffness(&d.a);
        let m = proj.mass(d.c);
        let s = proj.stabilization();
        let f = proj.load(d.f);
        for i in 0..k {
            let Some(row) = dof_of_node[nodes[i]] else { continue };
            rhs[row] += f[i];
            for j in 0..k {
                let v = a[i * k + j] + m[i * k + j] + gamma * s[i * k + j];
                match dof_of_node[nodes[j]] {
                    Some(col) => triplets.push((row, col, v)),
                    None => rhs[row] -= v * boundary_values[nodes[j]].unwrap(),
                }
            }
        }
    }
    Ok(SparseSystem { matrix: CsrMatrix::from_triplets(n, triplets), rhs, dof_of_node, node_of_dof, boundary_values })
}

/// `Π∇u` on every alive element, indexed by element id.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedField {
    per_element: Vec<Option<Affine>>,
}

impl ProjectedField {
    pub fn get(&self, e: ElemId) -> Option<&Affine> {
        self.per_element.get(e).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElemId, &Affine)> {
        self.per_element.iter().enumerate().filter_map(|(e, p)| p.as_ref().map(|p| (e, p)))
    }
}

pub fn project_solution(mesh: &MeshForest, nodal: &[f64]) -> Result<ProjectedField> {
    if nodal.len() != mesh.num_nodes() {
        return Err(AvemError::InvalidParameter("one value per node required".into()));
    }
    let mut per_element = vec![None; mesh.elements().len()];
    for e in mesh.alive_elements() {
        let (nodes, proj) = LocalProjection::from_mesh(mesh, e)?;
        let vals: Vec<f64> = nodes.iter().map(|&n| nodal[n]).collect();
        per_element[e] = Some(proj.project(&vals));
    }
    Ok(ProjectedField { per_element })
}

fn local_values(nodes: &[NodeId], v: &[f64]) -> Vec<f64> {
    nodes.iter().map(|&n| v[n]).collect()
}

/// `a_T(v, w) = Σ_E |E| (A_E ∇Π∇v) · ∇Π∇w` for nodal vectors `v`, `w`.
pub fn energy_form(mesh: &MeshForest, data: &PiecewiseConstantData, v: &[f64], w: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for e in mesh.alive_elements() {
        let (nodes, proj) = LocalProjection::from_mesh(mesh, e)?;
        let gv = proj.project(&local_values(&nodes, v)).gradient;
        let gw = proj.project(&local_values(&nodes, w)).gradient;
        total += proj.area * geometry::dot(geometry::tensor_apply(&data.get(e)?.a, gv), gw);
    }
    Ok(total)
}

/// `S_T(v, w) = Σ_E Σ_{x_i ∈ N_E} (v − I_E v)(x_i) (w − I_E w)(x_i)`.
pub fn stabilization_form(mesh: &MeshForest, v: &[f64], w: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for e in mesh.alive_elements() {
        let (nodes, proj) = LocalProjection::from_mesh(mesh, e)?;
        let dv = proj.interpolation_defect(&local_values(&nodes, v));
        let dw = proj.interpolation_defect(&local_values(&nodes, w));
        total += dv.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(total)
}

/// `Σ_E ∫_E |∇u − ∇Π∇u_T|²`, by the degree-4 rule on each polygon fan.
pub fn h1_error_squared(mesh: &MeshForest, projected: &ProjectedField, exact_gradient: &dyn Fn(Point) -> [f64; 2]) -> f64 {
    mesh.alive_elements()
        .map(|e| {
            let g = projected.get(e).map_or([0.0; 2], |p| p.gradient);
            geometry::integrate_polygon(&mesh.polygon(e), |x| {
                let d = geometry::sub(exact_gradient(x), g);
                geometry::dot(d, d)
            })
        })
        .sum()
}

/// `|u − Π∇_T u_T|_{1,T} / |u|_{1,Ω}`.
pub fn h1_like_error(
    mesh: &MeshForest,
    nodal: &[f64],
    exact_gradient: &dyn Fn(Point) -> [f64; 2],
    exact_seminorm: f64,
) -> Result<f64> {
    if !(exact_seminorm > 0.0) {
        return Err(AvemError::InvalidParameter("exact H1 seminorm must be positive".into()));
    }
    let proj = project_solution(mesh, nodal)?;
    Ok(h1_error_squared(mesh, &proj, exact_gradient).sqrt() / exact_seminorm)
}

/// `Σ_E ∫_E |∇g|²` by the degree-4 rule on each polygon fan.
pub fn h1_seminorm_squared(mesh: &MeshForest, gradient: &dyn Fn(Point) -> [f64; 2]) -> f64 {
    mesh.alive_elements()
        .map(|e| {
            geometry::integrate_polygon(&mesh.polygon(e), |x| {
                let g = gradient(x);
                geometry::dot(g, g)
            })
        })
        .sum()
}
