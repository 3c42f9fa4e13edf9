//! Residual a posteriori estimator and Dörfler marking.

use crate::data::ProblemData;
use crate::error::{AvemError, Result};
use crate::geometry::{self, Affine};
use crate::mesh::{ElemId, MeshForest};
use crate::vem::{self, LocalProjection, PiecewiseConstantData, ProjectedField};

/// Contributions of one element to the estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalEstimate {
    pub element: ElemId,
    /// `‖f_E − c_E Π∇u‖²_{0,E}`.
    pub residual2: f64,
    /// `Σ_e |e| j_e²` over the polygon edges of the element.
    pub jump2: f64,
    /// `h_E² residual2 + ½ h_E jump2`.
    pub eta2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorField {
    /// Sorted by element id.
    pub local: Vec<LocalEstimate>,
    pub total: f64,
}

impl EstimatorField {
    pub fn from_values(values: impl IntoIterator<Item = (ElemId, f64)>) -> Self {
        let mut local: Vec<LocalEstimate> = values
            .into_iter()
            .map(|(element, eta2)| LocalEstimate { element, residual2: 0.0, jump2: 0.0, eta2 })
            .collect();
        local.sort_by_key(|l| l.element);
        let total = local.iter().map(|l| l.eta2).sum();
        Self { local, total }
    }

    pub fn eta(&self) -> f64 {
        self.total.sqrt()
    }

    pub fn len(&self) -> usize {
        self.local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local.is_empty()
    }
}

/// `f_E − c_E Π∇u` as an affine function.
pub fn internal_residual(data: &vem::ElementData, projected: &Affine) -> Affine {
    Affine::new(data.f - data.c * projected.constant, projected.gradient.map(|g| -data.c * g))
}

/// Normal flux jump across the edge `p -> q` of `e` (outward normal of `e`).
/// Zero on the domain boundary.
pub fn jump_residual(
    mesh: &MeshForest,
    data: &PiecewiseConstantData,
    projected: &ProjectedField,
    e: ElemId,
    p: crate::mesh::NodeId,
    q: crate::mesh::NodeId,
) -> Result<f64> {
    let Some(other) = mesh.neighbor_across(e, p, q) else { return Ok(0.0) };
    let n = geometry::outward_normal(mesh.node(p).xy, mesh.node(q).xy);
    let flux = |el: ElemId| -> Result<f64> {
        let g = projected
            .get(el)
            .ok_or_else(|| AvemError::DataMismatch(format!("no projection on element {el}")))?
            .gradient;
        Ok(geometry::dot(geometry::tensor_apply(&data.get(el)?.a, g), n))
    };
    Ok(flux(e)? - flux(other)?)
}

/// Evaluates `η²_T(E)` on every alive element for the nodal vector `u`.
pub fn estimate(mesh: &MeshForest, data: &PiecewiseConstantData, u: &[f64]) -> Result<EstimatorField> {
    let projected = vem::project_solution(mesh, u)?;
    estimate_projected(mesh, data, &projected)
}

pub fn estimate_projected(
    mesh: &MeshForest,
    data: &PiecewiseConstantData,
    projected: &ProjectedField,
) -> Result<EstimatorField> {
    let mut local = Vec::with_capacity(mesh.num_alive());
    for e in mesh.alive_elements() {
        let d = data.get(e)?;
        let pu = projected.get(e).ok_or_else(|| AvemError::DataMismatch(format!("no projection on element {e}")))?;
        let r = internal_residual(d, pu);
        let tri = mesh.corner_points(e);
        let residual2 = geometry::integrate_affine_product(tri, &r, &r);
        let mut jump2 = 0.0;
        for [p, q] in mesh.element_edges(e)? {
            let j = jump_residual(mesh, data, projected, e, p, q)?;
            let len = geometry::norm(geometry::sub(mesh.node(q).xy, mesh.node(p).xy));
            jump2 += len * j * j;
        }
        let area = geometry::signed_area(tri);
        let h = area.sqrt();
        local.push(LocalEstimate { element: e, residual2, jump2, eta2: area * residual2 + 0.5 * h * jump2 });
    }
    let total = local.iter().map(|l| l.eta2).sum();
    Ok(EstimatorField { local, total })
}

/// `S_T(u, u)`.
pub fn stab_term(mesh: &MeshForest, u: &[f64]) -> Result<f64> {
    vem::stabilization_form(mesh, u, u)
}

/// Smallest set of elements carrying at least the fraction `theta` of the
/// total; largest contributions first, ties by element id. At least one
/// element is marked.
pub fn dorfler_mark(field: &EstimatorField, theta: f64) -> Result<Vec<ElemId>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(AvemError::InvalidParameter(format!("marking parameter must lie in (0, 1), got {theta}")));
    }
    if field.local.is_empty() {
        return Err(AvemError::EmptyEstimator);
    }
    let mut order: Vec<&LocalEstimate> = field.local.iter().collect();
    order.sort_by(|a, b| b.eta2.total_cmp(&a.eta2).then(a.element.cmp(&b.element)));
    let target = theta * field.total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for l in order {
        marked.push(l.element);
        acc += l.eta2;
        if acc >= target {
            break;
        }
    }
    marked.sort_unstable();
    Ok(marked)
}

/// `|||u − u_T|||² + |u_T − I_T u_T|²_{1,T}`, with the virtual function
/// represented through its projection.
pub fn total_error_quantity(mesh: &MeshForest, problem: &ProblemData, u: &[f64]) -> Result<f64> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| AvemError::InvalidParameter("problem has no exact solution".into()))?;
    let mut total = 0.0;
    for e in mesh.alive_elements() {
        let (nodes, proj) = LocalProjection::from_mesh(mesh, e)?;
        let vals: Vec<f64> = nodes.iter().map(|&n| u[n]).collect();
        let pu = proj.project(&vals);
        let tri = proj.triangle();
        total += geometry::integrate_polygon(&proj.points, |x| {
            let dg = geometry::sub((exact.gradient)(x), pu.gradient);
            let dv = (exact.value)(x) - pu.eval(x);
            geometry::dot(geometry::tensor_apply(&(problem.diffusion)(x), dg), dg) + (problem.reaction)(x) * dv * dv
        });
        let corner_vals = proj.corner_slots.map(|k| vals[k]);
        let interp = Affine::interpolate(tri, corner_vals);
        let d = geometry::sub(pu.gradient, interp.gradient);
        total += proj.area * geometry::dot(d, d);
    }
    Ok(total)
}
