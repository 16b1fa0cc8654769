//! Lanczos with full reorthogonalization on Hermitian operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector, Storage};

/// Orthonormal Krylov basis `Q` and real tridiagonal coefficients.
struct Lanczos {
    basis: Vec<CVector>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual vector after the last step; zero on breakdown.
    last_beta: f64,
}

fn lanczos(a: &Storage, v: &CVector, m: usize, mut stop: impl FnMut(&[f64], &[f64], f64) -> bool) -> Lanczos {
    let n = v.len();
    let m = m.min(n).max(1);
    let v_norm = v.norm();
    let mut basis = vec![v / c(v_norm)];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut last_beta = 0.0;
    for j in 0..m {
        let mut w = a.mul_vec(&basis[j]);
        let aj = basis[j].dotc(&w).re;
        alpha.push(aj);
        // two passes of classical Gram–Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dotc(&w);
                w.axpy(-proj, q, c(1.0));
            }
        }
        let bj = w.norm();
        let scale = alpha.iter().fold(0.0f64, |s, x| s.max(x.abs())) + beta.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        last_beta = bj;
        if bj <= 1e-13 * scale.max(1e-300) || j + 1 == n {
            last_beta = if j + 1 == n { 0.0 } else { bj };
            if bj <= 1e-13 * scale.max(1e-300) {
                last_beta = 0.0;
            }
            break;
        }
        if stop(&alpha, &beta, bj) || j + 1 == m {
            break;
        }
        beta.push(bj);
        basis.push(w / c(bj));
    }
    Lanczos { basis, alpha, beta, last_beta }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// `e^{−tT} e₁` for the tridiagonal `T`.
fn small_exp(alpha: &[f64], beta: &[f64], t: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(tridiagonal(alpha, beta));
    let k = alpha.len();
    let mut out = DVector::zeros(k);
    for j in 0..k {
        let wj = (-t * eig.eigenvalues[j]).exp() * eig.eigenvectors[(0, j)];
        for i in 0..k {
            out[i] += eig.eigenvectors[(i, j)] * wj;
        }
    }
    out
}

/// Result of a Krylov exponential with its a-posteriori error estimate
/// `β_m |(e^{−tT_m} e₁)_m| ‖v‖`, summed over sub-steps.
#[derive(Debug, Clone)]
pub struct KrylovExp {
    pub value: CVector,
    pub error_estimate: f64,
    pub substeps: usize,
}

/// `e^{−tA} v` by Lanczos, halving the step until each sub-step meets `tol`
/// relative to the norm of its input vector.
pub fn expmv(a: &Storage, t: f64, v: &CVector, max_dim: usize, tol: f64) -> Result<KrylovExp> {
    let mut steps = vec![t];
    let mut out = v.clone();
    let mut total_err = 0.0;
    let mut count = 0;
    while let Some(tau) = steps.pop() {
        match expmv_single(a, tau, &out, max_dim, tol) {
            Ok((val, err)) => {
                out = val;
                total_err += err;
                count += 1;
            }
            Err(_) if tau > t * 2f64.powi(-30) => {
                steps.push(tau / 2.0);
                steps.push(tau / 2.0);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(KrylovExp { value: out, error_estimate: total_err, substeps: count })
}

fn expmv_single(a: &Storage, t: f64, v: &CVector, max_dim: usize, tol: f64) -> Result<(CVector, f64)> {
    let v_norm = v.norm();
    if v_norm == 0.0 || t == 0.0 {
        return Ok((v.clone(), 0.0));
    }
    let mut estimate = f64::INFINITY;
    let lz = lanczos(a, v, max_dim, |alpha, beta, bj| {
        let y = small_exp(alpha, beta, t);
        estimate = bj * y[alpha.len() - 1].abs() * v_norm;
        estimate <= tol * v_norm
    });
    let y = small_exp(&lz.alpha, &lz.beta, t);
    let k = lz.alpha.len();
    let err = if lz.last_beta == 0.0 { 0.0 } else { lz.last_beta * y[k - 1].abs() * v_norm };
    if err > tol * v_norm {
        return Err(Error::KrylovBreakdown(format!("subspace of dimension {k} reached error {err:.3e} at step {t}")));
    }
    let mut out = CVector::zeros(v.len());
    for (i, q) in lz.basis.iter().take(k).enumerate() {
        out.axpy(c(y[i] * v_norm), q, c(1.0));
    }
    Ok((out, err))
}

/// Lowest Ritz pair with residual `‖Ax − θx‖`.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: CVector,
    pub residual: f64,
}

/// Restarted Lanczos for the smallest eigenvalue; each cycle restarts from
/// the current Ritz vector.
pub fn lowest_eigenpair(a: &Storage, start: &CVector, cycle_dim: usize, max_cycles: usize, tol: f64) -> Result<RitzPair> {
    let mut x = start / c(start.norm());
    let mut best = RitzPair { value: f64::INFINITY, vector: x.clone(), residual: f64::INFINITY };
    for _ in 0..max_cycles {
        let lz = lanczos(a, &x, cycle_dim, |_, _, _| false);
        let k = lz.alpha.len();
        let eig = SymmetricEigen::new(tridiagonal(&lz.alpha, &lz.beta));
        let j = (0..k).min_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q])).unwrap();
        let mut y = CVector::zeros(x.len());
        for (i, q) in lz.basis.iter().take(k).enumerate() {
            y.axpy(c(eig.eigenvectors[(i, j)]), q, c(1.0));
        }
        y /= c(y.norm());
        let theta = eig.eigenvalues[j];
        let residual = (a.mul_vec(&y) - &y * c(theta)).norm();
        best = RitzPair { value: theta, vector: y.clone(), residual };
        if residual <= tol {
            return Ok(best);
        }
        x = y;
    }
    Err(Error::EigenNonConvergence { residual: best.residual })
}

/// Dense helper used when a Krylov method must fall back.
pub fn dense_exp(a: &CMatrix, t: f64, v: &CVector) -> CVector {
    crate::linalg::HermitianEigen::new(a).apply_function(|l| (-t * l).exp(), v)
}
