//! Independent oracles for the integration suites.
//!
//! Every quantity the library computes through its production path is
//! re-derived here through a structurally different algorithm: singular
//! values come from one-sided Jacobi on columns (production: two-sided
//! Jacobi on the Gram matrix), symmetric extreme eigenvalues from Gershgorin
//! plus LDL^T inertia bisection (production: full Jacobi spectrum), the
//! minimal inter-event time from the exact solution of the comparison ODE
//! (production: RK4 marching plus bisection), and characteristic-polynomial
//! values from LU determinants of sI - A (production: trace recursion).
//! Agreement is then a real check, not a restatement.

#![allow(dead_code)]

use ctrl_dos::numerics::matrix::Matrix;
use ctrl_dos::plant::LtiSystem;

fn vnorm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.hypot(*x))
}

/// Singular values, descending, via one-sided Jacobi: rotate column pairs
/// until mutually orthogonal; the column norms are the singular values.
pub fn svd_values(m: &Matrix) -> Vec<f64> {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    for _ in 0..64 {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..rows {
                    app += a[(i, p)] * a[(i, p)];
                    aqq += a[(i, q)] * a[(i, q)];
                    apq += a[(i, p)] * a[(i, q)];
                }
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols)
        .map(|j| {
            let col: Vec<f64> = (0..rows).map(|i| a[(i, j)]).collect();
            vnorm(&col)
        })
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

pub fn oracle_spectral_norm(m: &Matrix) -> f64 {
    svd_values(m)[0]
}

pub fn oracle_min_singular(m: &Matrix) -> f64 {
    *svd_values(m).last().unwrap()
}

/// Eigenvalues of the symmetric matrix s strictly below t, counted through
/// the inertia of the unpivoted LDL^T factorization of s - tI. Breakdown
/// pivots are nudged; bisection callers never sit exactly on an eigenvalue
/// for more than one probe.
fn eigs_below(s: &Matrix, t: f64) -> usize {
    let n = s.rows();
    let mut a = s.clone();
    let scale = s.max_abs().max(t.abs()).max(1e-300);
    for i in 0..n {
        a[(i, i)] -= t;
    }
    let mut neg = 0;
    for k in 0..n {
        let mut piv = a[(k, k)];
        if piv.abs() < 1e-40 * scale {
            piv = 1e-40 * scale;
        }
        if piv < 0.0 {
            neg += 1;
        }
        for i in (k + 1)..n {
            let f = a[(i, k)] / piv;
            for j in (k + 1)..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    neg
}

/// Largest eigenvalue of a symmetric matrix: Gershgorin bracket, then
/// inertia bisection.
pub fn oracle_sym_max_eig(s: &Matrix) -> f64 {
    let n = s.rows();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        lo = lo.min(s[(i, i)] - r);
        hi = hi.max(s[(i, i)] + r);
    }
    // Widen so the strict count at the ends is unambiguous.
    let pad = 1e-8 * (hi - lo).abs().max(1.0);
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        if hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eigs_below(s, mid) >= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact crossing time of phi' = a + (a+b) phi + b phi^2, phi(0) = 0, at
/// level f. The quadratic factors as (b phi + a)(phi + 1), so separation of
/// variables gives the logarithmic closed form.
pub fn oracle_tau(a: f64, b: f64, f: f64) -> f64 {
    assert!(a > 0.0 && b >= 0.0 && f > 0.0);
    if (a - b).abs() < 1e-13 * a.max(b) {
        return f / (a * (f + 1.0));
    }
    (a * (f + 1.0) / (b * f + a)).ln() / (a - b)
}

/// Same crossing time by fixed-step RK4 marching with linear interpolation
/// inside the crossing step, Richardson-extrapolated from steps h and h/2.
/// Validates the closed form with an algorithm that shares nothing with it.
pub fn richardson_tau(a: f64, b: f64, f: f64) -> f64 {
    let march = |h: f64| -> f64 {
        let rhs = |p: f64| a + (a + b) * p + b * p * p;
        let mut t = 0.0;
        let mut phi = 0.0;
        loop {
            let k1 = rhs(phi);
            let k2 = rhs(phi + 0.5 * h * k1);
            let k3 = rhs(phi + 0.5 * h * k2);
            let k4 = rhs(phi + h * k3);
            let next = phi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if next >= f {
                return t + h * (f - phi) / (next - phi);
            }
            t += h;
            phi = next;
            assert!(t < 1e3, "no crossing");
        }
    };
    let h = oracle_tau(a, b, f) / 200.0;
    let t1 = march(h);
    let t2 = march(h / 2.0);
    (4.0 * t2 - t1) / 3.0
}

/// det(s I - m) by LU with partial pivoting; a charpoly evaluation that
/// shares nothing with the trace recursion.
pub fn char_value(m: &Matrix, s: f64) -> f64 {
    let n = m.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| {
        let d = if i == j { s } else { 0.0 };
        d - m[(i, j)]
    });
    let mut det = 1.0;
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if a[(i, k)].abs() > a[(p, k)].abs() {
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                let tmp = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = tmp;
            }
            det = -det;
        }
        let piv = a[(k, k)];
        if piv == 0.0 {
            return 0.0;
        }
        det *= piv;
        for i in (k + 1)..n {
            let f = a[(i, k)] / piv;
            for j in (k + 1)..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    det
}

/// Closed-form Jordan chain column entries for the n-fold pole at -lambda
/// of the canonical closed loop: column j, row i (1-indexed) is
/// (-1)^(i+1) C(n-i+j-2, j-1) lambda^(i-j).
pub fn chain_entry(n: usize, lambda: f64, j: usize, i: usize) -> f64 {
    let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
    let c = if j == 1 {
        1.0
    } else {
        let top = n as i64 - i as i64 + j as i64 - 2;
        let k = j as i64 - 1;
        if top < k {
            return 0.0;
        }
        num_integer::binomial(top as u64, k as u64) as f64
    };
    sign * c * lambda.powi(i as i32 - j as i32)
}

/// Companion-form plant with char poly s^3 + 3 s^2 + 2 s - 3.
pub fn sys3() -> LtiSystem {
    let a = Matrix::from_vec(
        3,
        3,
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -3.0, -2.0, 3.0],
    );
    let b = Matrix::column(&[0.0, 0.0, 1.0]);
    LtiSystem::new(a, b).unwrap()
}

/// Companion-form plant with char poly s^5 + 6 s^4 - 4 s^3 + 3 s^2 - 10 s + 7.
pub fn sys5() -> LtiSystem {
    let a = Matrix::from_vec(
        5,
        5,
        vec![
            0.0, 1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, 1.0, //
            -7.0, 10.0, -3.0, 4.0, -6.0,
        ],
    );
    let b = Matrix::column(&[0.0, 0.0, 0.0, 0.0, 1.0]);
    LtiSystem::new(a, b).unwrap()
}
