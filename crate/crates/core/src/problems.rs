//! Benchmark problems with structured initial meshes.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::data::{ExactSolution, ProblemData};
use crate::error::Result;
use crate::geometry::Point;
use crate::mesh::MeshForest;
use crate::vem;

/// A problem together with its initial mesh.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub mesh: MeshForest,
    pub data: ProblemData,
}

impl ProblemSpec {
    /// `|u|_{1,Ω}`, by quadrature on `levels` uniform refinements of the initial mesh.
    pub fn exact_seminorm(&self, levels: usize) -> Result<Option<f64>> {
        let Some(exact) = &self.data.exact else { return Ok(None) };
        let mut fine = self.mesh.clone();
        for _ in 0..levels {
            fine.refine_uniform()?;
        }
        Ok(Some(vem::h1_seminorm_squared(&fine, &*exact.gradient).sqrt()))
    }
}

/// Structured triangulation of the union of the square cells of size `h`
/// covering `[x0, x1] × [y0, y1]` whose centers satisfy `keep`. Each cell is
/// split along its lower-left to upper-right diagonal.
pub fn structured_mesh(x0: f64, x1: f64, y0: f64, y1: f64, h: f64, keep: impl Fn(Point) -> bool) -> Result<MeshForest> {
    let nx = ((x1 - x0) / h).round() as usize;
    let ny = ((y1 - y0) / h).round() as usize;
    let mut id = vec![vec![usize::MAX; nx + 1]; ny + 1];
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    let mut node = |i: usize, j: usize, points: &mut Vec<Point>| {
        if id[j][i] == usize::MAX {
            id[j][i] = points.len();
            points.push([x0 + i as f64 * h, y0 + j as f64 * h]);
        }
        id[j][i]
    };
    for j in 0..ny {
        for i in 0..nx {
            let center = [x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h];
            if !keep(center) {
                continue;
            }
            let p00 = node(i, j, &mut points);
            let p10 = node(i + 1, j, &mut points);
            let p11 = node(i + 1, j + 1, &mut points);
            let p01 = node(i, j + 1, &mut points);
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    MeshForest::new(points, triangles)
}

fn gauss(x: Point, center: Point, width: f64) -> f64 {
    let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
    (-width * (dx * dx + dy * dy)).exp()
}

/// Diffusion coefficient of the L-shape benchmark: one plus two Gaussian bumps.
pub fn lshape_diffusion(x: Point) -> f64 {
    1.0 + gauss(x, [-0.5, -0.5], 50.0) + gauss(x, [-0.5, 0.5], 50.0)
}

pub fn lshape_diffusion_gradient(x: Point) -> [f64; 2] {
    let e1 = gauss(x, [-0.5, -0.5], 50.0);
    let e2 = gauss(x, [-0.5, 0.5], 50.0);
    [-100.0 * ((x[0] + 0.5) * e1 + (x[0] + 0.5) * e2), -100.0 * ((x[1] + 0.5) * e1 + (x[1] - 0.5) * e2)]
}

pub fn lshape_reaction(x: Point) -> f64 {
    1.0 + gauss(x, [-0.5, 0.0], 50.0) + gauss(x, [0.0, 0.5], 50.0)
}

/// Polar angle in `[0, 2π)`.
fn angle(x: Point) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn corner_part(x: Point) -> f64 {
    let r = x[0].hypot(x[1]);
    r.powf(2.0 / 3.0) * (2.0 * angle(x) / 3.0).sin()
}

fn corner_part_gradient(x: Point) -> [f64; 2] {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let a = angle(x) / 3.0;
    let s = 2.0 / 3.0 * r.powf(-1.0 / 3.0);
    [-s * a.sin(), s * a.cos()]
}

fn peak(x: Point) -> f64 {
    gauss(x, [0.5, 0.5], 1000.0)
}

/// Exact solution: the corner singularity plus a sharp peak at (0.5, 0.5).
pub fn lshape_solution(x: Point) -> f64 {
    corner_part(x) + peak(x)
}

pub fn lshape_solution_gradient(x: Point) -> [f64; 2] {
    let g = peak(x);
    let s = corner_part_gradient(x);
    [s[0] - 2000.0 * (x[0] - 0.5) * g, s[1] - 2000.0 * (x[1] - 0.5) * g]
}

/// `f = −a Δu − ∇a · ∇u + c u`; the corner part is harmonic.
pub fn lshape_load(x: Point) -> f64 {
    let g = peak(x);
    let rho2 = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
    let laplacian = g * (4.0e6 * rho2 - 4000.0);
    let grad_a = lshape_diffusion_gradient(x);
    let grad_u = lshape_solution_gradient(x);
    -lshape_diffusion(x) * laplacian - (grad_a[0] * grad_u[0] + grad_a[1] * grad_u[1])
        + lshape_reaction(x) * lshape_solution(x)
}

/// The L-shaped domain `(−1, 1)² \ [0, 1] × [−1, 0]` with variable diffusion
/// and reaction, a corner singularity and a sharp interior peak, on a
/// structured mesh of cells with side `h`.
pub fn lshape(h: f64) -> Result<ProblemSpec> {
    let mesh = structured_mesh(-1.0, 1.0, -1.0, 1.0, h, |c| !(c[0] > 0.0 && c[1] < 0.0))?;
    let data = ProblemData {
        diffusion: Arc::new(|x| {
            let a = lshape_diffusion(x);
            [[a, 0.0], [0.0, a]]
        }),
        reaction: Arc::new(lshape_reaction),
        load: Arc::new(lshape_load),
        dirichlet: Arc::new(lshape_solution),
        exact: Some(ExactSolution { value: Arc::new(lshape_solution), gradient: Arc::new(lshape_solution_gradient) }),
    };
    Ok(ProblemSpec { name: "lshape", mesh, data })
}

/// Unit square with the harmonic affine solution `1 + 2x − y`, `A = I`, `c = 0`.
pub fn square_affine() -> Result<ProblemSpec> {
    let u = |x: Point| 1.0 + 2.0 * x[0] - x[1];
    let data = ProblemData {
        diffusion: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
        reaction: Arc::new(|_| 0.0),
        load: Arc::new(|_| 0.0),
        dirichlet: Arc::new(u),
        exact: Some(ExactSolution { value: Arc::new(u), gradient: Arc::new(|_| [2.0, -1.0]) }),
    };
    Ok(ProblemSpec { name: "square", mesh: structured_mesh(0.0, 1.0, 0.0, 1.0, 0.25, |_| true)?, data })
}

/// Unit square with `u = sin(πx) sin(πy)`, `A = I`, `c = 0`.
pub fn square_smooth() -> Result<ProblemSpec> {
    let u = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
    let data = ProblemData {
        diffusion: Arc::new(|_| [[1.0, 0.0], [0.0, 1.0]]),
        reaction: Arc::new(|_| 0.0),
        load: Arc::new(move |x| 2.0 * PI * PI * u(x)),
        dirichlet: Arc::new(|_| 0.0),
        exact: Some(ExactSolution {
            value: Arc::new(u),
            gradient: Arc::new(|x| {
                [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
            }),
        }),
    };
    Ok(ProblemSpec { name: "square-smooth", mesh: structured_mesh(0.0, 1.0, 0.0, 1.0, 0.25, |_| true)?, data })
}

pub fn by_name(name: &str, h: f64) -> Option<Result<ProblemSpec>> {
    match name {
        "lshape" => Some(lshape(h)),
        "square" => Some(square_affine()),
        "square-smooth" => Some(square_smooth()),
        _ => None,
    }
}

pub const PROBLEM_NAMES: [&str; 3] = ["lshape", "square", "square-smooth"];
