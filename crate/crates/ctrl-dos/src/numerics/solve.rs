//! Linear solves: LU with partial pivoting (square systems, inverses),
//! Householder least squares for the consistent rank-deficient chain solves,
//! and pivoted-QR rank decisions.
//!
//! Every public solve verifies its own residual against the policy bound;
//! a violation is reported as rank deficiency carrying the residual.

use crate::error::{Error, Result};
use crate::numerics::matrix::{norm2, Matrix, Vector};
use crate::numerics::policy;

struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

fn lu_factor(m: &Matrix) -> Result<LuFactors> {
    let n = m.rows();
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_val = lu[(k, k)].abs();
        for i in (k + 1)..n {
            if lu[(i, k)].abs() > pivot_val {
                pivot_val = lu[(i, k)].abs();
                pivot_row = i;
            }
        }
        if pivot_val == 0.0 {
            return Err(Error::RankDeficiency { residual: f64::INFINITY });
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(k, pivot_row);
        }
        for i in (k + 1)..n {
            let f = lu[(i, k)] / lu[(k, k)];
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

fn lu_apply(f: &LuFactors, b: &[f64]) -> Vector {
    let n = f.perm.len();
    let mut y: Vector = f.perm.iter().map(|&i| b[i]).collect();
    for i in 1..n {
        for j in 0..i {
            y[i] -= f.lu[(i, j)] * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            y[i] -= f.lu[(i, j)] * y[j];
        }
        y[i] /= f.lu[(i, i)];
    }
    y
}

fn check_residual(m: &Matrix, v: &[f64], b: &[f64]) -> Result<()> {
    let mv = m.mul_vec(v);
    let r: Vector = mv.iter().zip(b).map(|(a, c)| a - c).collect();
    let residual = norm2(&r);
    // Row-sum norm of M: cheap, within sqrt(n) of the spectral norm.
    let mnorm = m.transpose().norm_one();
    let bound = policy::SOLVE_RESIDUAL_REL * (mnorm * norm2(v) + norm2(b));
    if residual.is_finite() && residual <= bound.max(f64::MIN_POSITIVE) {
        Ok(())
    } else {
        Err(Error::RankDeficiency { residual })
    }
}

/// Solve M v = b for square nonsingular M, verifying the residual.
pub fn solve(m: &Matrix, b: &[f64]) -> Result<Vector> {
    if !m.is_square() || m.rows() != b.len() {
        return Err(Error::InvalidInput("solve needs square M and matching b".into()));
    }
    if !m.all_finite() || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("solve input has non-finite entries".into()));
    }
    let f = lu_factor(m)?;
    let v = lu_apply(&f, b);
    check_residual(m, &v, b)?;
    Ok(v)
}

/// Matrix inverse by LU; each column's residual is verified.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::InvalidInput("inverse needs a square matrix".into()));
    }
    if !m.all_finite() {
        return Err(Error::InvalidInput("inverse input has non-finite entries".into()));
    }
    let n = m.rows();
    let f = lu_factor(m)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu_apply(&f, &e);
        check_residual(m, &col, &e)?;
        inv.set_col(j, &col);
        e[j] = 0.0;
    }
    Ok(inv)
}

/// Householder QR solve of the overdetermined (or square) system m w = b in
/// the least-squares sense. Rows are assumed pre-scaled by the caller.
fn householder_ls(m: &Matrix, b: &[f64]) -> Result<Vector> {
    let rows = m.rows();
    let cols = m.cols();
    debug_assert!(rows >= cols);
    let mut r = m.clone();
    let mut y = b.to_vec();
    for k in 0..cols {
        let mut alpha: f64 = (k..rows).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            return Err(Error::RankDeficiency { residual: f64::INFINITY });
        }
        if r[(k, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v: Vector = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum();
            let f = 2.0 * s / vnorm2;
            for i in k..rows {
                r[(i, j)] -= f * v[i - k];
            }
        }
        let s: f64 = (k..rows).map(|i| v[i - k] * y[i]).sum();
        let f = 2.0 * s / vnorm2;
        for i in k..rows {
            y[i] -= f * v[i - k];
        }
    }
    let mut w = vec![0.0; cols];
    for i in (0..cols).rev() {
        let mut acc = y[i];
        for j in (i + 1)..cols {
            acc -= r[(i, j)] * w[j];
        }
        if r[(i, i)] == 0.0 {
            return Err(Error::RankDeficiency { residual: f64::INFINITY });
        }
        w[i] = acc / r[(i, i)];
    }
    Ok(w)
}

/// Solve the consistent system m v = b with coordinate `pinned` of v fixed
/// to zero: the pinned column is dropped, the remaining least-squares system
/// is row-equilibrated (legal because consistency makes scaling solution-
/// preserving) and solved by Householder QR. Equilibration matters: the
/// generalized-eigenvector chains feed systems whose row scales differ by
/// lambda^n, and unit-scaling the rows brings the conditioning back to O(1).
pub fn least_squares_particular(m: &Matrix, b: &[f64], pinned: usize) -> Result<Vector> {
    if !m.is_square() || m.rows() != b.len() || pinned >= m.cols() {
        return Err(Error::InvalidInput(
            "least_squares_particular needs square M, matching b, pinned < n".into(),
        ));
    }
    if !m.all_finite() || b.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("solve input has non-finite entries".into()));
    }
    let n = m.rows();
    let w = ls_solve_dropped(m, b, pinned)?;
    let mut v = vec![0.0; n];
    let mut wi = 0;
    for j in 0..n {
        if j != pinned {
            v[j] = w[wi];
            wi += 1;
        }
    }
    check_residual(m, &v, b)?;
    Ok(v)
}

/// Drop column `dropped` of m, row-equilibrate, and solve in the LS sense.
/// Returns the n-1 surviving coordinates in column order. No residual check
/// here; callers verify in their own norm.
pub(crate) fn ls_solve_dropped(m: &Matrix, b: &[f64], dropped: usize) -> Result<Vector> {
    let n = m.rows();
    if n < 2 {
        return Err(Error::InvalidInput("cannot drop a column of a 1x1 system".into()));
    }
    let mut reduced = Matrix::zeros(n, n - 1);
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let mut row_scale = 0.0f64;
        for j in 0..n {
            if j != dropped {
                row_scale = row_scale.max(m[(i, j)].abs());
            }
        }
        let s = if row_scale > 0.0 { 1.0 / row_scale } else { 1.0 };
        let mut jj = 0;
        for j in 0..n {
            if j != dropped {
                reduced[(i, jj)] = m[(i, j)] * s;
                jj += 1;
            }
        }
        rhs[i] = b[i] * s;
    }
    householder_ls(&reduced, &rhs)
}

/// Numerical rank via column-pivoted Householder QR: diagonal entries of R
/// below `tol_rel` times the largest initial column norm do not count.
pub fn rank_via_pivoted_qr(m: &Matrix, tol_rel: f64) -> usize {
    let rows = m.rows();
    let cols = m.cols();
    let kmax = rows.min(cols);
    let mut r = m.clone();
    let mut col_order: Vec<usize> = (0..cols).collect();
    let scale = (0..cols).map(|j| norm2(&m.col(j))).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = tol_rel * scale;
    let mut rank = 0;
    for k in 0..kmax {
        // Pivot: bring the column with the largest remaining norm to front.
        let mut best = k;
        let mut best_norm = 0.0;
        for j in k..cols {
            let nj: f64 = (k..rows).map(|i| r[(i, j)] * r[(i, j)]).sum::<f64>().sqrt();
            if nj > best_norm {
                best_norm = nj;
                best = j;
            }
        }
        if best_norm <= tol {
            break;
        }
        if best != k {
            for i in 0..rows {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, best)];
                r[(i, best)] = tmp;
            }
            col_order.swap(k, best);
        }
        let mut alpha = best_norm;
        if r[(k, k)] > 0.0 {
            alpha = -alpha;
        }
        let mut v: Vector = (k..rows).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let s: f64 = (k..rows).map(|i| v[i - k] * r[(i, j)]).sum();
                let f = 2.0 * s / vnorm2;
                for i in k..rows {
                    r[(i, j)] -= f * v[i - k];
                }
            }
        }
        rank += 1;
    }
    rank
}
