//! Preconditioned conjugate gradients for the symmetric positive definite
//! Galerkin systems.

use crate::error::{AvemError, Result};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative residual target `‖Ax − b‖ / ‖b‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iterations: 20_000, preconditioner: Preconditioner::Diagonal }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(AvemError::InvalidParameter(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(AvemError::InvalidParameter("solver needs at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `initial` (zero when `None`).
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    initial: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats)> {
    config.validate()?;
    let n = a.dim();
    if b.len() != n || initial.is_some_and(|x| x.len() != n) {
        return Err(AvemError::InvalidParameter("vector length does not match matrix".into()));
    }
    let b_norm = dot(b, b).sqrt();
    if n == 0 || b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats::default()));
    }
    let inv_diag: Vec<f64> = match config.preconditioner {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Diagonal => a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { f64::NAN })
            .collect(),
    };
    if let Some(i) = inv_diag.iter().position(|d| d.is_nan()) {
        return Err(AvemError::Indefinite(a.get(i, i)));
    }

    let mut x = initial.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;
    let mut it = 0;
    while res > config.tolerance {
        if it == config.max_iterations {
            return Err(AvemError::NoConvergence { iterations: it, residual: res });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(AvemError::Indefinite(pap));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
        res = dot(&r, &r).sqrt() / b_norm;
    }
    Ok((x, SolveStats { iterations: it, relative_residual: res }))
}
