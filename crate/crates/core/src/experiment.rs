//! Experiment harness: runs the adaptive solver or the greedy data
//! approximations on a benchmark and writes tables, meshes and summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{self, Norm};
use crate::driver::{self, AvemConfig, AvemOutcome};
use crate::error::{AvemError, Result};
use crate::geometry::Point;
use crate::mesh::{self, MeshForest, SvgOptions};
use crate::problems::{self, ProblemSpec};

/// Least-squares slope of `log y` against `log x`; `None` with fewer than two
/// distinct abscissae or non-positive values.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// Points whose abscissa is within a factor ten of the largest one.
pub fn final_decade(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    points.iter().copied().filter(|p| p.0 >= max / 10.0).collect()
}

/// Mesh statistics for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshStats {
    pub vertices: usize,
    pub elements: usize,
    /// Elements with at least one hanging node on their boundary.
    pub polygons: usize,
    pub global_index: u32,
}

impl MeshStats {
    pub fn of(mesh: &MeshForest) -> Self {
        let polygons = mesh.alive_elements().filter(|&e| mesh.polygon(e).len() > 3).count();
        Self { vertices: mesh.num_nodes(), elements: mesh.num_alive(), polygons, global_index: mesh.global_index() }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub problem: &'static str,
    pub passes: usize,
    pub last_pass: usize,
    pub data_mesh: MeshStats,
    pub final_mesh: MeshStats,
    pub exact_seminorm: Option<f64>,
    /// `(#T, |u − Π∇u_T|₁ / |u|₁)` for every GALERKIN step.
    pub h1_history: Vec<(f64, f64)>,
    pub h1_slope: Option<f64>,
    /// Whether DATA refined nothing in the second pass.
    pub data_idle_in_second_pass: Option<bool>,
}

/// Uniform refinements used to evaluate `|u|_{1,Ω}`.
pub const SEMINORM_LEVELS: usize = 8;

pub fn summarize(spec: &ProblemSpec, outcome: &AvemOutcome, exact_seminorm: Option<f64>) -> ExperimentSummary {
    let trace = &outcome.trace;
    let h1_history: Vec<(f64, f64)> = match exact_seminorm {
        Some(norm) if norm > 0.0 => trace
            .galerkin_steps()
            .filter_map(|(_, s)| s.h1_error2.map(|e| (s.elements as f64, e.sqrt() / norm)))
            .collect(),
        _ => Vec::new(),
    };
    ExperimentSummary {
        problem: spec.name,
        passes: trace.passes.len(),
        last_pass: trace.last_pass().unwrap_or(0),
        data_mesh: MeshStats::of(&outcome.data_mesh),
        final_mesh: MeshStats::of(&outcome.mesh),
        exact_seminorm,
        h1_slope: loglog_slope(&final_decade(&h1_history)),
        h1_history,
        data_idle_in_second_pass: trace.passes.get(1).map(|p| p.data_refinements == 0),
    }
}

pub fn run_experiment(spec: &ProblemSpec, config: &AvemConfig, out_dir: Option<&Path>) -> Result<(AvemOutcome, ExperimentSummary)> {
    let seminorm = spec.exact_seminorm(SEMINORM_LEVELS)?;
    let outcome = driver::avem(spec.mesh.clone(), &spec.data, config)?;
    let summary = summarize(spec, &outcome, seminorm);
    if let Some(dir) = out_dir {
        write_artifacts(dir, config, &outcome, &summary)?;
    }
    Ok((outcome, summary))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.10e}"))
}

pub fn convergence_csv(outcome: &AvemOutcome, exact_seminorm: Option<f64>) -> String {
    let mut s = String::from("pass,step,elements,nodes,dofs,eta,stab,h1_error,marked,solver_iterations\n");
    for p in &outcome.trace.passes {
        for (j, g) in p.galerkin.iter().enumerate() {
            let h1 = g.h1_error2.zip(exact_seminorm).map(|(e, n)| e.sqrt() / n);
            writeln!(
                s,
                "{},{},{},{},{},{:.10e},{:.10e},{},{},{}",
                p.k,
                j,
                g.elements,
                g.nodes,
                g.dofs,
                g.eta2.sqrt(),
                g.stab,
                opt(h1),
                g.marked,
                g.solver_iterations
            )
            .unwrap();
        }
    }
    s
}

pub fn data_csv(outcome: &AvemOutcome) -> String {
    let mut s = String::from("pass,step,elements,zeta_a,zeta_c,zeta_f,zeta_total\n");
    for p in &outcome.trace.passes {
        for (j, d) in p.data_steps.iter().enumerate() {
            writeln!(
                s,
                "{},{},{},{:.10e},{:.10e},{:.10e},{:.10e}",
                p.k,
                j,
                d.elements,
                d.zeta_a,
                d.zeta_c,
                d.zeta_f,
                d.total()
            )
            .unwrap();
        }
    }
    s
}

pub fn passes_csv(outcome: &AvemOutcome) -> String {
    let mut s = String::from(
        "pass,eps,data_refinements,data_elements,data_nodes,data_index,galerkin_refinements,final_elements,final_nodes,final_index,eta,total_error\n",
    );
    for p in &outcome.trace.passes {
        let last = p.galerkin.last().expect("at least one step");
        writeln!(
            s,
            "{},{:.10e},{},{},{},{},{},{},{},{},{:.10e},{}",
            p.k,
            p.eps,
            p.data_refinements,
            p.data_elements,
            p.data_nodes,
            p.data_global_index,
            p.galerkin.len() - 1,
            p.final_elements,
            p.final_nodes,
            p.final_global_index,
            last.eta2.sqrt(),
            opt(p.total_error2.map(f64::sqrt))
        )
        .unwrap();
    }
    s
}

pub fn stats_text(summary: &ExperimentSummary, config: &AvemConfig) -> String {
    let mut s = String::new();
    let line = |s: &mut String, k: &str, v: String| writeln!(s, "{k:<28} {v}").unwrap();
    line(&mut s, "problem", summary.problem.to_string());
    line(
        &mut s,
        "parameters",
        format!(
            "gamma={} lambda={} theta={} theta_data={:.6} omega={} eps0={} tol={}",
            config.gamma, config.max_index, config.theta, config.theta_data, config.omega, config.eps0, config.tol
        ),
    );
    line(&mut s, "passes", summary.passes.to_string());
    line(&mut s, "last pass index", summary.last_pass.to_string());
    for (name, m) in [("after last DATA", summary.data_mesh), ("final", summary.final_mesh)] {
        line(
            &mut s,
            &format!("{name} mesh"),
            format!(
                "vertices={} elements={} polygons={} global_index={}",
                m.vertices, m.elements, m.polygons, m.global_index
            ),
        );
    }
    line(&mut s, "exact H1 seminorm", opt(summary.exact_seminorm));
    line(
        &mut s,
        "H1 error slope (last decade)",
        summary.h1_slope.map_or_else(|| "undefined".into(), |v| format!("{v:.4}")),
    );
    line(
        &mut s,
        "DATA idle in second pass",
        summary.data_idle_in_second_pass.map_or_else(|| "n/a".into(), |b| b.to_string()),
    );
    s
}

pub fn write_artifacts(
    dir: &Path,
    config: &AvemConfig,
    outcome: &AvemOutcome,
    summary: &ExperimentSummary,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("convergence.csv"), convergence_csv(outcome, summary.exact_seminorm))?;
    fs::write(dir.join("data.csv"), data_csv(outcome))?;
    fs::write(dir.join("passes.csv"), passes_csv(outcome))?;
    fs::write(dir.join("stats.txt"), stats_text(summary, config))?;
    let opts = SvgOptions::default();
    fs::write(dir.join("mesh_data.svg"), outcome.data_mesh.to_svg(&opts, |_| None))?;
    fs::write(dir.join("mesh_final.svg"), outcome.mesh.to_svg(&opts, |_| None))?;
    let heat = SvgOptions { mark_polygons: false, ..opts };
    fs::write(dir.join("bisections.svg"), outcome.mesh.bisection_heatmap_svg(&outcome.data_mesh, &heat))?;
    fs::write(dir.join("mesh_data.txt"), mesh::write_mesh(&outcome.data_mesh))?;
    fs::write(dir.join("mesh_final.txt"), mesh::write_mesh(&outcome.mesh))?;
    let mut sol = String::from("node,value\n");
    for (id, v) in outcome.solution.iter().enumerate() {
        writeln!(sol, "{id},{v:.15e}").unwrap();
    }
    fs::write(dir.join("solution.csv"), sol)?;
    Ok(())
}

/// Scalar functions available to the greedy experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyTarget {
    /// L-shape diffusion coefficient.
    Diffusion,
    /// L-shape reaction coefficient.
    Reaction,
    /// L-shape load.
    Load,
    /// `g(x, y) = x`.
    Linear,
    /// A single narrow Gaussian.
    Bump,
    /// Constant one.
    Constant,
}

impl GreedyTarget {
    pub const NAMES: [&'static str; 6] = ["a", "c", "f", "x", "bump", "one"];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "a" => Self::Diffusion,
            "c" => Self::Reaction,
            "f" => Self::Load,
            "x" => Self::Linear,
            "bump" => Self::Bump,
            "one" => Self::Constant,
            _ => return None,
        })
    }

    pub fn eval(self, x: Point) -> f64 {
        match self {
            Self::Diffusion => problems::lshape_diffusion(x),
            Self::Reaction => problems::lshape_reaction(x),
            Self::Load => problems::lshape_load(x),
            Self::Linear => x[0],
            Self::Bump => (-200.0 * ((x[0] + 0.5).powi(2) + (x[1] - 0.5).powi(2))).exp(),
            Self::Constant => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyRow {
    pub delta: f64,
    pub elements: usize,
    pub zeta: f64,
}

#[derive(Clone, Copy, Debug)]
pub enum GreedyMode {
    /// Threshold every local error against `δ`, with weight `h^t` and the given norm.
    Threshold { t: f64, norm: Norm },
    /// Max-strategy marking on the global `L²` error with fraction `θ`.
    Pseudo { theta: f64 },
}

/// Runs GREEDY or P-GREEDY for `steps` thresholds `δ_start · factor^i`,
/// continuing each run on the previous mesh.
pub fn run_greedy_experiment(
    mut mesh: MeshForest,
    g: &dyn Fn(Point) -> f64,
    mode: GreedyMode,
    delta_start: f64,
    factor: f64,
    steps: usize,
    max_index: u32,
) -> Result<(Vec<GreedyRow>, Option<f64>)> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(AvemError::InvalidParameter(format!("delta factor must lie in (0, 1), got {factor}")));
    }
    let mut rows = Vec::with_capacity(steps);
    let mut delta = delta_start;
    for _ in 0..steps {
        let out = match mode {
            GreedyMode::Threshold { t, norm } => data::greedy(&mut mesh, g, delta, t, norm, max_index, 200)?,
            GreedyMode::Pseudo { theta } => data::p_greedy(&mut mesh, g, delta, theta, max_index, 200)?,
        };
        rows.push(GreedyRow { delta, elements: mesh.num_alive(), zeta: out.zeta });
        delta *= factor;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.elements as f64, r.zeta)).collect();
    Ok((rows, loglog_slope(&final_decade(&pts))))
}

pub fn greedy_csv(rows: &[GreedyRow]) -> String {
    let mut s = String::from("delta,elements,zeta\n");
    for r in rows {
        writeln!(s, "{:.10e},{},{:.10e}", r.delta, r.elements, r.zeta).unwrap();
    }
    s
}
