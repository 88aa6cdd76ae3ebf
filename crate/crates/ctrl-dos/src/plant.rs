//! Plant-side types: the LTI system, its controllable canonical form, and
//! the worst-case periodic jammer profile.

use crate::error::{Error, Result};
use crate::numerics::matrix::{Matrix, Vector};
use crate::numerics::{policy, solve};

/// Single-input LTI plant xdot = A x + B u. Controllability of (A, B) is
/// checked at construction; everything downstream may assume it.
#[derive(Clone, Debug)]
pub struct LtiSystem {
    a: Matrix,
    b: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("A must be square".into()));
        }
        let n = a.rows();
        if n > policy::MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "state dimension {n} exceeds the supported cap {}",
                policy::MAX_DIM
            )));
        }
        if b.rows() != n || b.cols() != 1 {
            return Err(Error::InvalidInput(format!("B must be {n}x1")));
        }
        if !a.all_finite() || !b.all_finite() {
            return Err(Error::InvalidInput("A or B has non-finite entries".into()));
        }
        let ctrl = controllability_matrix(&a, &b);
        let rank = solve::rank_via_pivoted_qr(&ctrl, policy::RANK_THRESHOLD_REL);
        if rank < n {
            return Err(Error::NotControllable { rank, n });
        }
        Ok(LtiSystem { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    /// Transform to controllable canonical form. The similarity P satisfies
    /// x = P x_c, built as P = [B AB ... A^{n-1}B] W with W the Hankel
    /// matrix of characteristic coefficients; for a plant already in
    /// canonical form this collapses to the identity exactly.
    pub fn to_canonical(&self) -> Result<CanonicalSystem> {
        let n = self.n();
        let coeffs = charpoly(&self.a);

        let mut ac = Matrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            ac[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            // last row reads (-a_n, ..., -a_1)
            ac[(n - 1, j)] = -coeffs[n - 1 - j];
        }
        let mut bc = Matrix::zeros(n, 1);
        bc[(n - 1, 0)] = 1.0;

        // W_{ij} = a_{n-1-i-j} with a_0 = 1 and negative subscripts zero
        // (0-based i, j; coeffs[k-1] stores a_k).
        let w = Matrix::from_fn(n, n, |i, j| {
            let idx = n as isize - 1 - i as isize - j as isize;
            if idx < 0 {
                0.0
            } else if idx == 0 {
                1.0
            } else {
                coeffs[idx as usize - 1]
            }
        });
        let p = &controllability_matrix(&self.a, &self.b) * &w;

        // A P = P Ac must hold to the canonical residual bound.
        let ap = &self.a * &p;
        let pac = &p * &ac;
        let denom = ap.max_abs().max(1.0);
        let resid = (&ap - &pac).max_abs() / denom;
        if !resid.is_finite() || resid > policy::CANONICAL_RESIDUAL_REL {
            return Err(Error::NumericalFailure(format!(
                "canonical transform residual {resid:e} exceeds {:e}",
                policy::CANONICAL_RESIDUAL_REL
            )));
        }

        Ok(CanonicalSystem { ac, bc, p, a_coeffs: coeffs })
    }
}

fn controllability_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let mut ctrl = Matrix::zeros(n, n);
    let mut col = b.col(0);
    ctrl.set_col(0, &col);
    for j in 1..n {
        col = a.mul_vec(&col);
        ctrl.set_col(j, &col);
    }
    ctrl
}

/// Characteristic polynomial s^n + a_1 s^{n-1} + ... + a_n by the
/// Faddeev-LeVerrier recursion; returns [a_1, ..., a_n]. Exact rational
/// structure at small n, no root-finding involved.
pub fn charpoly(a: &Matrix) -> Vector {
    let n = a.rows();
    let mut coeffs = Vec::with_capacity(n);
    let mut m = a.clone();
    let mut c = -m.trace();
    coeffs.push(c);
    for k in 2..=n {
        let mut shifted = m;
        for i in 0..n {
            shifted[(i, i)] += c;
        }
        m = a * &shifted;
        c = -m.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Controllable canonical realization plus the similarity back to the
/// original coordinates (x = P x_c).
#[derive(Clone, Debug)]
pub struct CanonicalSystem {
    pub ac: Matrix,
    pub bc: Matrix,
    pub p: Matrix,
    /// a_1 ... a_n with a_1 multiplying s^{n-1}.
    pub a_coeffs: Vector,
}

impl CanonicalSystem {
    pub fn n(&self) -> usize {
        self.ac.rows()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JammerState {
    Sleeping,
    Active,
}

/// Worst-case PWM jammer: sleeps for exactly T_off_cr at the start of each
/// period of length T and is active for the remaining T_on_cr = T - T_off_cr.
/// Longer actual sleep windows only help; they are out of the model.
#[derive(Clone, Copy, Debug)]
pub struct JammerProfile {
    t: f64,
    t_off_cr: f64,
}

impl JammerProfile {
    pub fn new(t: f64, t_off_cr: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("period T = {t} must be positive")));
        }
        if !(t_off_cr.is_finite() && t_off_cr > 0.0 && t_off_cr < t) {
            return Err(Error::InvalidParameter(format!(
                "T_off_cr = {t_off_cr} must lie strictly inside (0, {t})"
            )));
        }
        Ok(JammerProfile { t, t_off_cr })
    }

    pub fn period(&self) -> f64 {
        self.t
    }

    pub fn t_off_cr(&self) -> f64 {
        self.t_off_cr
    }

    pub fn t_on_cr(&self) -> f64 {
        self.t - self.t_off_cr
    }

    /// Jammer state at time t >= 0. Sleeping iff t mod T lands in
    /// [0, T_off_cr); the boundary instant t mod T == T_off_cr is Active
    /// (conservative: the usable window is half-open on the right), while
    /// exact period starts are Sleeping. IEEE fmod is exact, so the period
    /// reduction introduces no rounding of its own.
    pub fn state(&self, t: f64) -> JammerState {
        let r = t.rem_euclid(self.t);
        if r < self.t_off_cr {
            JammerState::Sleeping
        } else {
            JammerState::Active
        }
    }
}
