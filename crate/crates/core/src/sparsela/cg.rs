//! Jacobi-preconditioned conjugate gradients with a dense fallback.
//!
//! The assembled systems are symmetric. For positive-definite systems CG
//! converges; if a non-positive curvature `p^T A p <= 0` is met, the solve
//! stops with a breakdown report and [`solve_spd`] falls back to a dense LU
//! factorization for systems up to [`DENSE_FALLBACK_LIMIT`] unknowns.

use serde::Serialize;

use super::CsrMatrix;
use crate::error::{Error, Result};

pub const DENSE_FALLBACK_LIMIT: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target relative residual `||b - A x|| / ||b||`.
    pub tol: f64,
    /// Iteration cap; `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Cg,
    DenseLu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    /// CG met `p^T A p <= 0`.
    pub breakdown: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    a.spmv_into(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    r
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
            context: "square system matrix",
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
            context: "right-hand side",
        });
    }
    Ok(())
}

/// Solves `A x = b` for symmetric positive-definite `A`.
///
/// Non-convergence is not an error here: the report carries
/// `converged = false` and the best iterate is returned.
pub fn solve_cg(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let n = b.len();
    let inv_diag = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| if d == 0.0 { Err(Error::ZeroDiagonal { row: i }) } else { Ok(1.0 / d) })
        .collect::<Result<Vec<f64>>>()?;

    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    let mut report = SolveReport {
        method: SolveMethod::Cg,
        iterations: 0,
        relative_residual: 0.0,
        converged: true,
        breakdown: false,
    };
    if b_norm == 0.0 {
        return Ok((x, report));
    }

    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let target = opts.tol * b_norm;
    let mut best = (f64::INFINITY, x.clone());
    let mut iterations = 0;

    // Outer loop restarts from the true residual whenever the recursively
    // updated one claims convergence too early.
    'restart: loop {
        let mut r = residual(a, &x, b);
        let true_norm = norm2(&r);
        if true_norm < best.0 {
            best = (true_norm, x.clone());
        }
        if true_norm <= target || iterations >= max_iter {
            break;
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];

        while iterations < max_iter {
            a.spmv_into(&p, &mut ap);
            let curvature = dot(&p, &ap);
            if !(curvature > 0.0) {
                report.breakdown = true;
                break 'restart;
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if norm2(&r) <= target {
                continue 'restart;
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
        }
        let r_norm = norm2(&residual(a, &x, b));
        if r_norm < best.0 {
            best = (r_norm, x.clone());
        }
        break;
    }

    report.iterations = iterations;
    report.relative_residual = best.0 / b_norm;
    report.converged = !report.breakdown && best.0 <= target;
    Ok((best.1, report))
}

/// Dense LU solve with partial pivoting, for small or indefinite systems.
pub fn solve_dense(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    check_square(a, b)?;
    let n = b.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            m[(i, j)] = v;
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotConverged {
            iterations: 0,
            residual: f64::INFINITY,
        })?
        .as_slice()
        .to_vec();
    let b_norm = norm2(b);
    let r = norm2(&residual(a, &x, b));
    Ok((
        x,
        SolveReport {
            method: SolveMethod::DenseLu,
            iterations: 0,
            relative_residual: if b_norm > 0.0 { r / b_norm } else { r },
            converged: true,
            breakdown: false,
        },
    ))
}

/// CG with dense fallback on breakdown; non-convergence becomes an error.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, SolveReport)> {
    let (x, report) = solve_cg(a, b, opts)?;
    if report.converged {
        return Ok((x, report));
    }
    if report.breakdown && b.len() <= DENSE_FALLBACK_LIMIT {
        let (x, mut dense) = solve_dense(a, b)?;
        dense.breakdown = true;
        dense.iterations = report.iterations;
        return Ok((x, dense));
    }
    Err(Error::NotConverged {
        iterations: report.iterations,
        residual: report.relative_residual,
    })
}
