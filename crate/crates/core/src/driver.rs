//! The adaptive loops: GALERKIN (solve, estimate, mark, refine) for fixed
//! piecewise-constant data, and the two-step AVEM loop that alternates data
//! approximation with GALERKIN under a halving tolerance.

use crate::data::{self, DataStep, ProblemData};
use crate::error::{AvemError, Result};
use crate::estimator;
use crate::mesh::MeshForest;
use crate::solver::{self, SolverConfig};
use crate::vem::{self, PiecewiseConstantData};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AvemConfig {
    /// Stabilization parameter `γ`.
    pub gamma: f64,
    /// Admissibility bound `Λ` on the global index.
    pub max_index: u32,
    /// Dörfler fraction.
    pub theta: f64,
    /// Fraction for the pseudo-greedy load marking.
    pub theta_data: f64,
    /// Safety factor applied to the data tolerance.
    pub omega: f64,
    pub eps0: f64,
    pub tol: f64,
    pub galerkin_cap: usize,
    pub data_cap: usize,
    pub solver: SolverConfig,
}

impl Default for AvemConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            max_index: 10,
            theta: 0.5,
            theta_data: 0.75f64.sqrt(),
            omega: 1.0,
            eps0: 1.0,
            tol: 0.125,
            galerkin_cap: 60,
            data_cap: data::DATA_ITERATION_CAP,
            solver: SolverConfig::default(),
        }
    }
}

impl AvemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AvemError::InvalidParameter(msg));
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        for (name, v) in [("theta", self.theta), ("theta_data", self.theta_data)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return bad(format!("omega must lie in (0, 1], got {}", self.omega));
        }
        if !(self.tol > 0.0 && self.eps0 >= self.tol) {
            return bad(format!("need eps0 >= tol > 0, got eps0 = {}, tol = {}", self.eps0, self.tol));
        }
        if self.galerkin_cap == 0 || self.data_cap == 0 {
            return bad("iteration caps must be positive".into());
        }
        self.solver.validate()
    }
}

/// One SOLVE/ESTIMATE pass of GALERKIN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalerkinStep {
    pub elements: usize,
    pub nodes: usize,
    pub dofs: usize,
    pub eta2: f64,
    pub stab: f64,
    pub marked: usize,
    pub solver_iterations: usize,
    /// `|u − Π∇u_T|²_{1,T}` when the exact solution is known.
    pub h1_error2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GalerkinOutcome {
    /// Nodal values of the final discrete solution.
    pub solution: Vec<f64>,
    pub averages: PiecewiseConstantData,
    pub steps: Vec<GalerkinStep>,
}

impl GalerkinOutcome {
    /// Number of refinements performed.
    pub fn refinements(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn final_step(&self) -> &GalerkinStep {
        self.steps.last().expect("at least one step")
    }
}

/// Extends a nodal vector to nodes created since it was computed; new nodes
/// take the mean of their parents.
pub fn prolongate(mesh: &MeshForest, old: &[f64]) -> Vec<f64> {
    let mut u = old.to_vec();
    for node in &mesh.nodes()[old.len().min(mesh.num_nodes())..] {
        let v = node.parents.map_or(0.0, |[p, q]| 0.5 * (u[p] + u[q]));
        u.push(v);
    }
    u
}

/// Refines `mesh` until the estimator for the fixed data `averages` is at
/// most `eps`. Children inherit the constants of their parents.
pub fn galerkin(
    mesh: &mut MeshForest,
    mut averages: PiecewiseConstantData,
    problem: &ProblemData,
    eps: f64,
    config: &AvemConfig,
    initial: Option<&[f64]>,
) -> Result<GalerkinOutcome> {
    let mut steps = Vec::new();
    let mut guess = initial.map(|u| prolongate(mesh, u));
    for iteration in 0..=config.galerkin_cap {
        averages.inherit(mesh)?;
        let system = vem::assemble(mesh, &averages, config.gamma, &*problem.dirichlet)?;
        let start = guess.as_ref().map(|g| system.restrict(g));
        let (x, stats) = solver::solve_spd(&system.matrix, &system.rhs, start.as_deref(), &config.solver)?;
        let u = system.expand(&x);
        let projected = vem::project_solution(mesh, &u)?;
        let field = estimator::estimate_projected(mesh, &averages, &projected)?;
        let h1_error2 = problem
            .exact
            .as_ref()
            .map(|ex| vem::h1_error_squared(mesh, &projected, &*ex.gradient));
        let mut step = GalerkinStep {
            elements: mesh.num_alive(),
            nodes: mesh.num_nodes(),
            dofs: system.num_dofs(),
            eta2: field.total,
            stab: estimator::stab_term(mesh, &u)?,
            marked: 0,
            solver_iterations: stats.iterations,
            h1_error2,
        };
        if field.eta() <= eps {
            steps.push(step);
            return Ok(GalerkinOutcome { solution: u, averages, steps });
        }
        if iteration == config.galerkin_cap {
            break;
        }
        let marked = estimator::dorfler_mark(&field, config.theta)?;
        step.marked = marked.len();
        steps.push(step);
        mesh.refine(&marked, config.max_index)?;
        guess = Some(prolongate(mesh, &u));
    }
    Err(AvemError::IterationCap { stage: "GALERKIN", cap: config.galerkin_cap })
}

/// Record of one outer AVEM pass.
#[derive(Clone, Debug)]
pub struct PassRecord {
    pub k: usize,
    pub eps: f64,
    pub data_steps: Vec<DataStep>,
    pub data_refinements: usize,
    /// Size and global index of the mesh after DATA.
    pub data_elements: usize,
    pub data_nodes: usize,
    pub data_global_index: u32,
    pub galerkin: Vec<GalerkinStep>,
    pub final_elements: usize,
    pub final_nodes: usize,
    pub final_global_index: u32,
    /// `|||u − u_T|||² + |u_T − I_T u_T|²_{1,T}` at GALERKIN exit, when the exact solution is known.
    pub total_error2: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub passes: Vec<PassRecord>,
}

impl RunTrace {
    /// Index of the last pass.
    pub fn last_pass(&self) -> Option<usize> {
        self.passes.last().map(|p| p.k)
    }

    /// All GALERKIN steps in order, each tagged with its pass.
    pub fn galerkin_steps(&self) -> impl Iterator<Item = (usize, &GalerkinStep)> {
        self.passes.iter().flat_map(|p| p.galerkin.iter().map(move |s| (p.k, s)))
    }
}

#[derive(Clone, Debug)]
pub struct AvemOutcome {
    /// Final mesh after the last GALERKIN call.
    pub mesh: MeshForest,
    /// Mesh produced by the last DATA call.
    pub data_mesh: MeshForest,
    pub solution: Vec<f64>,
    pub trace: RunTrace,
}

/// Runs the two-step adaptive loop from the conforming mesh `mesh`.
///
/// Passes run while the current tolerance exceeds `tol / 2`, halving it after
/// each pass; with `eps0 = 1` and `tol = 1/8` that is four passes, the last
/// one with tolerance `tol`.
pub fn avem(mut mesh: MeshForest, problem: &ProblemData, config: &AvemConfig) -> Result<AvemOutcome> {
    config.validate()?;
    let mut trace = RunTrace::default();
    let mut eps = config.eps0;
    let mut k = 0;
    let mut solution: Option<Vec<f64>> = None;
    let mut data_mesh = mesh.clone();
    while eps > 0.5 * config.tol {
        let data_out =
            data::data_loop(&mut mesh, problem, config.omega * eps, config.theta_data, config.max_index, config.data_cap)?;
        data_mesh = mesh.clone();
        let (data_elements, data_nodes, data_global_index) = (mesh.num_alive(), mesh.num_nodes(), mesh.global_index());
        let gal = galerkin(&mut mesh, data_out.averages, problem, eps, config, solution.as_deref())?;
        let total_error2 = match problem.exact {
            Some(_) => Some(estimator::total_error_quantity(&mesh, problem, &gal.solution)?),
            None => None,
        };
        trace.passes.push(PassRecord {
            k,
            eps,
            data_steps: data_out.history,
            data_refinements: data_out.refinements,
            data_elements,
            data_nodes,
            data_global_index,
            galerkin: gal.steps,
            final_elements: mesh.num_alive(),
            final_nodes: mesh.num_nodes(),
            final_global_index: mesh.global_index(),
            total_error2,
        });
        solution = Some(gal.solution);
        eps *= 0.5;
        k += 1;
    }
    Ok(AvemOutcome { mesh, data_mesh, solution: solution.unwrap_or_default(), trace })
}
