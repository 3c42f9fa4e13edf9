//! Piecewise-constant approximation of the problem data.
//!
//! The adaptive solver only ever sees element averages of the diffusion,
//! reaction and load. This module computes those averages, measures how far
//! they are from the true data, and refines the mesh until the gap is below a
//! tolerance.

use std::fmt;
use std::sync::Arc;

use crate::error::{AvemError, Result};
use crate::geometry::{self, Point, Tensor};
use crate::mesh::{ElemId, MeshForest};
use crate::vem::{ElementData, PiecewiseConstantData};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type TensorFn = Arc<dyn Fn(Point) -> Tensor + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub value: ScalarFn,
    pub gradient: VectorFn,
}

/// Continuous data of `−∇·(A∇u) + c u = f` with `u = g` on the boundary.
#[derive(Clone)]
pub struct ProblemData {
    pub diffusion: TensorFn,
    pub reaction: ScalarFn,
    pub load: ScalarFn,
    pub dirichlet: ScalarFn,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData").field("has_exact", &self.exact.is_some()).finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Constant isotropic diffusion and reaction with the given load and boundary values.
    pub fn constant(a: f64, c: f64, f: f64, dirichlet: ScalarFn) -> Self {
        Self {
            diffusion: Arc::new(move |_| [[a, 0.0], [0.0, a]]),
            reaction: Arc::new(move |_| c),
            load: Arc::new(move |_| f),
            dirichlet,
            exact: None,
        }
    }
}

/// How the local data error is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    /// Maximum over sample points (quadrature nodes, polygon nodes, fan centroids).
    Max,
    /// Quadrature `L²` norm.
    L2,
}

/// Points where `L∞` norms are sampled on a polygon.
pub fn sample_points(polygon: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = polygon.to_vec();
    for t in geometry::fan(polygon) {
        pts.push(geometry::centroid(t));
        for &(l, _) in &geometry::TRIANGLE_RULE_ORDER4 {
            pts.push(geometry::barycentric_point(t, l));
        }
    }
    pts
}

fn mean(polygon: &[Point], area: f64, g: &dyn Fn(Point) -> f64) -> f64 {
    geometry::integrate_polygon(polygon, g) / area
}

/// Element averages of `A`, `c` and `f`; the averaged tensor is symmetrized.
pub fn project_data(mesh: &MeshForest, problem: &ProblemData) -> Result<PiecewiseConstantData> {
    PiecewiseConstantData::from_fn(mesh, |e| {
        let poly = mesh.polygon(e);
        let area = mesh.area(e);
        let mut a = [[0.0; 2]; 2];
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            a[i][j] = mean(&poly, area, &|x| (problem.diffusion)(x)[i][j]);
        }
        let off = 0.5 * (a[0][1] + a[1][0]);
        a[0][1] = off;
        a[1][0] = off;
        Ok(ElementData { a, c: mean(&poly, area, &*problem.reaction), f: mean(&poly, area, &*problem.load) })
    })
}

/// `h_E^t ‖g − ĝ‖_{L^q(E)}` for a scalar `g` and its average `g_mean`.
pub fn local_scalar_error(polygon: &[Point], area: f64, g: &dyn Fn(Point) -> f64, g_mean: f64, t: f64, norm: Norm) -> f64 {
    let h_t = area.sqrt().powf(t);
    match norm {
        Norm::Max => h_t * sample_points(polygon).into_iter().map(|x| (g(x) - g_mean).abs()).fold(0.0, f64::max),
        Norm::L2 => {
            h_t * geometry::integrate_polygon(polygon, |x| {
                let d = g(x) - g_mean;
                d * d
            })
            .sqrt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDataError {
    pub element: ElemId,
    pub zeta_a: f64,
    pub zeta_c: f64,
    pub zeta_f: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataEstimatorField {
    /// Sorted by element id.
    pub local: Vec<LocalDataError>,
    /// Maximum of the local diffusion errors.
    pub zeta_a: f64,
    /// Maximum of the local reaction errors.
    pub zeta_c: f64,
    /// `ℓ²` sum of the local load errors.
    pub zeta_f: f64,
}

impl DataEstimatorField {
    pub fn total(&self) -> f64 {
        self.zeta_a + self.zeta_c + self.zeta_f
    }
}

/// `ζ(E;A) = ‖A − Â‖_{L∞}`, `ζ(E;c) = h_E ‖c − ĉ‖_{L∞}`, `ζ(E;f) = h_E ‖f − f̂‖_{L²}`.
pub fn estimate_data(mesh: &MeshForest, problem: &ProblemData, averages: &PiecewiseConstantData) -> Result<DataEstimatorField> {
    let mut local = Vec::with_capacity(mesh.num_alive());
    for e in mesh.alive_elements() {
        let d = averages.get(e)?;
        let poly = mesh.polygon(e);
        let area = mesh.area(e);
        let zeta_a = sample_points(&poly)
            .into_iter()
            .map(|x| {
                let a = (problem.diffusion)(x);
                let diff = [[a[0][0] - d.a[0][0], a[0][1] - d.a[0][1]], [a[1][0] - d.a[1][0], a[1][1] - d.a[1][1]]];
                geometry::sym_spectral_norm(&diff)
            })
            .fold(0.0, f64::max);
        let zeta_c = local_scalar_error(&poly, area, &*problem.reaction, d.c, 1.0, Norm::Max);
        let zeta_f = local_scalar_error(&poly, area, &*problem.load, d.f, 1.0, Norm::L2);
        local.push(LocalDataError { element: e, zeta_a, zeta_c, zeta_f });
    }
    Ok(summarize(local))
}

fn summarize(local: Vec<LocalDataError>) -> DataEstimatorField {
    let zeta_a = local.iter().map(|l| l.zeta_a).fold(0.0, f64::max);
    let zeta_c = local.iter().map(|l| l.zeta_c).fold(0.0, f64::max);
    let zeta_f = local.iter().map(|l| l.zeta_f * l.zeta_f).sum::<f64>().sqrt();
    DataEstimatorField { local, zeta_a, zeta_c, zeta_f }
}

/// Greedy marking for diffusion and reaction, pseudo-greedy marking for the load.
pub fn mark_data(field: &DataEstimatorField, theta: f64, eps: f64) -> Result<Vec<ElemId>> {
    check_fraction(theta)?;
    let third = eps / 3.0;
    let f_max = field.local.iter().map(|l| l.zeta_f).fold(0.0, f64::max);
    let load_active = field.zeta_f >= third;
    Ok(field
        .local
        .iter()
        .filter(|l| l.zeta_a >= third || l.zeta_c >= third || (load_active && l.zeta_f >= theta * f_max))
        .map(|l| l.element)
        .collect())
}

fn check_fraction(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(AvemError::InvalidParameter(format!("marking fraction must lie in (0, 1), got {theta}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataStep {
    pub elements: usize,
    pub zeta_a: f64,
    pub zeta_c: f64,
    pub zeta_f: f64,
}

impl DataStep {
    fn of(mesh: &MeshForest, field: &DataEstimatorField) -> Self {
        Self { elements: mesh.num_alive(), zeta_a: field.zeta_a, zeta_c: field.zeta_c, zeta_f: field.zeta_f }
    }

    pub fn total(&self) -> f64 {
        self.zeta_a + self.zeta_c + self.zeta_f
    }
}

#[derive(Clone, Debug)]
pub struct DataOutcome {
    pub averages: PiecewiseConstantData,
    /// Number of refinement rounds performed.
    pub refinements: usize,
    /// One entry per estimate, the last one on the output mesh.
    pub history: Vec<DataStep>,
}

pub const DATA_ITERATION_CAP: usize = 100;

/// Refines `mesh` until the data error of the element averages is at most `eps`.
pub fn data_loop(
    mesh: &mut MeshForest,
    problem: &ProblemData,
    eps: f64,
    theta: f64,
    max_index: u32,
    cap: usize,
) -> Result<DataOutcome> {
    check_fraction(theta)?;
    if !(eps > 0.0) {
        return Err(AvemError::InvalidParameter(format!("data tolerance must be positive, got {eps}")));
    }
    let mut history = Vec::new();
    for refinements in 0..=cap {
        let averages = project_data(mesh, problem)?;
        let field = estimate_data(mesh, problem, &averages)?;
        history.push(DataStep::of(mesh, &field));
        if field.total() <= eps {
            return Ok(DataOutcome { averages, refinements, history });
        }
        if refinements == cap {
            break;
        }
        let marked = mark_data(&field, theta, eps)?;
        if marked.is_empty() {
            return Err(AvemError::InvalidParameter("data error above tolerance but nothing marked".into()));
        }
        mesh.refine(&marked, max_index)?;
    }
    Err(AvemError::IterationCap { stage: "DATA", cap })
}

#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub iterations: usize,
    /// `max_E ζ(E;g)` for the max norm, `(Σ_E ζ(E;g)²)^{1/2}` for `L²`.
    pub zeta: f64,
    pub max_local: f64,
}

fn local_errors(mesh: &MeshForest, g: &dyn Fn(Point) -> f64, t: f64, norm: Norm) -> Vec<(ElemId, f64)> {
    mesh.alive_elements()
        .map(|e| {
            let poly = mesh.polygon(e);
            let area = mesh.area(e);
            let avg = mean(&poly, area, g);
            (e, local_scalar_error(&poly, area, g, avg, t, norm))
        })
        .collect()
}

fn global(local: &[(ElemId, f64)], norm: Norm) -> (f64, f64) {
    let max = local.iter().map(|l| l.1).fold(0.0, f64::max);
    let zeta = match norm {
        Norm::Max => max,
        Norm::L2 => local.iter().map(|l| l.1 * l.1).sum::<f64>().sqrt(),
    };
    (zeta, max)
}

/// Refines every element with `h_E^t ‖g − ĝ‖_{L^q(E)} > delta` until none is left.
pub fn greedy(
    mesh: &mut MeshForest,
    g: &dyn Fn(Point) -> f64,
    delta: f64,
    t: f64,
    norm: Norm,
    max_index: u32,
    cap: usize,
) -> Result<GreedyOutcome> {
    if !(delta > 0.0) {
        return Err(AvemError::InvalidParameter(format!("greedy threshold must be positive, got {delta}")));
    }
    for iterations in 0..=cap {
        let local = local_errors(mesh, g, t, norm);
        let marked: Vec<ElemId> = local.iter().filter(|l| l.1 > delta).map(|l| l.0).collect();
        if marked.is_empty() {
            let (zeta, max_local) = global(&local, norm);
            return Ok(GreedyOutcome { iterations, zeta, max_local });
        }
        if iterations == cap {
            break;
        }
        mesh.refine(&marked, max_index)?;
    }
    Err(AvemError::IterationCap { stage: "GREEDY", cap })
}

/// Refines the elements with `ζ(E;f) ≥ θ max ζ(·;f)` until `ζ(f) ≤ delta`.
pub fn p_greedy(
    mesh: &mut MeshForest,
    f: &dyn Fn(Point) -> f64,
    delta: f64,
    theta: f64,
    max_index: u32,
    cap: usize,
) -> Result<GreedyOutcome> {
    check_fraction(theta)?;
    if !(delta > 0.0) {
        return Err(AvemError::InvalidParameter(format!("greedy threshold must be positive, got {delta}")));
    }
    for iterations in 0..=cap {
        let local = local_errors(mesh, f, 1.0, Norm::L2);
        let (zeta, max_local) = global(&local, Norm::L2);
        if zeta <= delta {
            return Ok(GreedyOutcome { iterations, zeta, max_local });
        }
        if iterations == cap {
            break;
        }
        let marked: Vec<ElemId> = local.iter().filter(|l| l.1 >= theta * max_local).map(|l| l.0).collect();
        mesh.refine(&marked, max_index)?;
    }
    Err(AvemError::IterationCap { stage: "P-GREEDY", cap })
}

/// `(1/α) |u|₁ (‖A − Â‖_∞ + ‖h(c − ĉ)‖_∞) + ‖h(f − f̂)‖₀`, an uncalibrated
/// indicator of how much the data approximation perturbs the solution.
pub fn perturbation_bound(field: &DataEstimatorField, coercivity: f64, solution_seminorm: f64) -> Result<f64> {
    if !(coercivity > 0.0) {
        return Err(AvemError::InvalidParameter("coercivity constant must be positive".into()));
    }
    Ok(solution_seminorm / coercivity * (field.zeta_a + field.zeta_c) + field.zeta_f)
}
