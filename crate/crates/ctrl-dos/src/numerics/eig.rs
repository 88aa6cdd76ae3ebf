//! Symmetric eigensolver (cyclic Jacobi) and the spectral norm built on it.
//!
//! Jacobi is chosen over tridiagonalization because two-sided rotations with
//! a relative stopping criterion compute small eigenvalues of graded
//! positive definite matrices to a relative accuracy governed by the scaled
//! condition number rather than the raw one. The decay-coefficient formula
//! divides by sqrt(lambda_min) of a Gram matrix whose raw condition number
//! grows like lambda^{4(n-1)}, so this property is load-bearing.

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::policy;

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigvals(s: &Matrix) -> Result<Vec<f64>> {
    sym_eig(s).map(|(vals, _)| vals)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (matching columns)
/// of a symmetric matrix, so that S = Q diag(vals) Q^T.
pub fn sym_eig(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !s.is_square() {
        return Err(Error::InvalidInput("symmetric eigensolve needs a square matrix".into()));
    }
    if !s.all_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let n = s.rows();
    let scale = s.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > policy::SYM_TOL_REL * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    s[(i, j)],
                    s[(j, i)]
                )));
            }
        }
    }

    let mut a = s.clone();
    let mut q = Matrix::identity(n);
    // Denormal dust far below the matrix scale cannot affect any eigenvalue
    // we report; skipping it prevents rotation cycling on zero diagonals.
    let dust = scale * 1e-300;

    let mut converged = false;
    'sweeps: for _ in 0..policy::JACOBI_SWEEP_CAP {
        let mut rotated = false;
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = a[(p, r)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(r, r)];
                let rel_gate = policy::JACOBI_OFF_REL * (app.abs() * aqq.abs()).sqrt();
                if apq.abs() <= rel_gate || apq.abs() <= dust {
                    continue;
                }
                rotated = true;

                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    // sqrt(1 + theta^2) would overflow; use the asymptote.
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;

                // A <- J^T A J with the Givens pair (p, r).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, r)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, r)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(r, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(r, k)] = sn * apk + c * aqk;
                }
                a[(p, r)] = 0.0;
                a[(r, p)] = 0.0;
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkq = q[(k, r)];
                    q[(k, p)] = c * qkp - sn * qkq;
                    q[(k, r)] = sn * qkp + c * qkq;
                }
            }
        }
        if !rotated {
            converged = true;
            break 'sweeps;
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi did not converge within {} sweeps",
            policy::JACOBI_SWEEP_CAP
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = Matrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((vals, vecs))
}

/// Largest singular value: sqrt of the top eigenvalue of M^T M.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if !m.all_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let gram = &m.transpose() * m;
    if !gram.all_finite() {
        return Err(Error::NumericalFailure("overflow while forming M^T M".into()));
    }
    let vals = sym_eigvals(&gram)?;
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    Ok(top.sqrt())
}
