//! Per-period decay coefficient C(lambda) and the resilience sweep.
//!
//! C(lambda) = C1 (C2 + C3) bounds |x((p+1)T)| / |x(pT)| for the worst-case
//! jammer; the sweep walks a lambda grid, reports all three components, and
//! extracts lambda_bar, the smallest grid lambda from which C stays below 1.

use crate::controller::{
    admissible_bound, bk_matrix, closed_loop, jordan_chain, synthesize_gain, trigger_threshold,
    GainLambda, JordanData,
};
use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::eig;
use crate::plant::{CanonicalSystem, JammerProfile};
use crate::trigger::{compute_tau, compute_tau_at_level, TauResult};
use rayon::prelude::*;

/// Log-norm surrogate mu_M = |max eig((M+M^T)/2)| + 1; the absolute value
/// avoids the sign confusion for stable M and keeps exp(t mu_M) >= ||exp(tM)||.
#[derive(Clone, Copy, Debug)]
pub struct MuValue {
    pub mu_raw: f64,
    pub mu_m: f64,
}

pub fn mu(m: &Matrix) -> Result<MuValue> {
    if !m.is_square() {
        return Err(Error::InvalidInput("mu needs a square matrix".into()));
    }
    // Float addition commutes, so this construction is exactly symmetric.
    let sym = Matrix::from_fn(m.rows(), m.rows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let vals = eig::sym_eigvals(&sym)?;
    let mu_raw = *vals.last().expect("square matrix has at least one eigenvalue");
    Ok(MuValue { mu_raw, mu_m: mu_raw.abs() + 1.0 })
}

/// Variant switches; both default off. `c3_half_exponent` halves the decay
/// exponent in C3 (the proof's intermediate inequality), `tau_stop_at_f`
/// stops the comparison ODE at the trigger threshold F(lambda) instead of
/// sigma. Defaults follow the published final formulas.
#[derive(Clone, Copy, Debug, Default)]
pub struct AnalysisOptions {
    pub c3_half_exponent: bool,
    pub tau_stop_at_f: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct DecayReport {
    pub lambda: f64,
    pub tau_lambda: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c: f64,
}

pub fn decay_coefficient(
    sys: &CanonicalSystem,
    g: &GainLambda,
    jd: &JordanData,
    tau: &TauResult,
    j: &JammerProfile,
    sigma: f64,
    opts: AnalysisOptions,
) -> Result<DecayReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    let norm_n = eig::spectral_norm(&jd.nilpotent)?;
    let bound = norm_n + 0.5;
    if !(g.lambda > bound) {
        return Err(Error::InadmissibleLambda { lambda: g.lambda, bound });
    }

    let t_inv_norm = eig::spectral_norm(&jd.t_lambda_inv)?;
    // lambda_min((T^-1)^T T^-1) = 1 / lambda_max(T^T T): the right-hand side
    // survives the kappa(T)^2 conditioning that destroys the left-hand side
    // when computed from the formed inverse Gram.
    let t_norm = eig::spectral_norm(&jd.t_lambda)?;
    if !(t_norm > 0.0 && t_norm.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "||T_lambda|| = {t_norm} is degenerate at lambda = {}",
            g.lambda
        )));
    }
    let sqrt_lam_min = 1.0 / t_norm;

    let rate = (1.0 - sigma) * (2.0 * g.lambda - 1.0 - 2.0 * norm_n);
    let t_off = j.t_off_cr();
    let t_on = j.t_on_cr();
    let mu_a = mu(&sys.ac)?.mu_m;
    let bk_norm = eig::spectral_norm(&bk_matrix(sys, g))?;

    let c1 = t_inv_norm * (-rate * t_off / 4.0).exp() / sqrt_lam_min;
    let c2 = (bk_norm / mu_a) * ((t_on * mu_a).exp() - 1.0);
    let c3_exponent = if opts.c3_half_exponent {
        -rate * tau.tau_lambda / 2.0
    } else {
        -rate * tau.tau_lambda
    };
    let c3 = t_inv_norm * c3_exponent.exp() * (t_on * mu_a).exp() / sqrt_lam_min;
    let c = c1 * (c2 + c3);
    for (name, v) in [("C1", c1), ("C2", c2), ("C3", c3), ("C", c)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::NumericalFailure(format!(
                "{name} = {v} is not a finite nonnegative coefficient at lambda = {}",
                g.lambda
            )));
        }
    }
    Ok(DecayReport { lambda: g.lambda, tau_lambda: tau.tau_lambda, c1, c2, c3, c })
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub reports: Vec<DecayReport>,
    pub lambda_bar: Option<f64>,
}

/// One grid point of the sweep; shared by `sweep` and the CLI.
pub fn analyze_lambda(
    sys: &CanonicalSystem,
    j: &JammerProfile,
    sigma: f64,
    lambda: f64,
    opts: AnalysisOptions,
) -> Result<DecayReport> {
    let g = synthesize_gain(sys.n(), lambda, &sys.a_coeffs)?;
    let acl = closed_loop(sys, &g);
    let jd = jordan_chain(&acl, lambda)?;
    let tau = if opts.tau_stop_at_f {
        let thr = trigger_threshold(&jd, &g, &sys.bc, sigma)?;
        compute_tau_at_level(sys, &g, thr.f)?
    } else {
        compute_tau(sys, &g, sigma)?
    };
    decay_coefficient(sys, &g, &jd, &tau, j, sigma, opts)
}

pub fn sweep(
    sys: &CanonicalSystem,
    j: &JammerProfile,
    sigma: f64,
    grid: &[f64],
    opts: AnalysisOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let bound = admissible_bound(sys.n());
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidParameter(format!(
                "sweep grid must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
    }
    for &l in grid {
        if !(l > bound) {
            return Err(Error::InvalidParameter(format!(
                "grid lambda = {l} is inadmissible (needs lambda > {bound})"
            )));
        }
    }

    // Pure per-lambda work, so grid points parallelize freely; collect()
    // reassembles in grid order no matter which worker finished first.
    let reports: Result<Vec<DecayReport>> = grid
        .par_iter()
        .map(|&lambda| analyze_lambda(sys, j, sigma, lambda, opts))
        .collect();
    let reports = reports?;

    // lambda_bar = first grid point of the maximal suffix with C < 1.
    let mut lambda_bar = None;
    for r in reports.iter().rev() {
        if r.c < 1.0 {
            lambda_bar = Some(r.lambda);
        } else {
            break;
        }
    }
    Ok(SweepResult { reports, lambda_bar })
}

/// Inverse interpolation of lambda for a target C on the strictly
/// decreasing tail of the sweep. Grid-point targets return the grid lambda
/// exactly (the linear formula degenerates to the endpoint).
pub fn interpolate_lambda_for_c(sweep: &SweepResult, target_c: f64) -> Result<f64> {
    if !target_c.is_finite() {
        return Err(Error::InvalidParameter(format!("target C = {target_c}")));
    }
    let rs = &sweep.reports;
    if rs.is_empty() {
        return Err(Error::Span { got: 0, need: 2 });
    }
    // Maximal strictly-decreasing suffix.
    let mut start = rs.len() - 1;
    while start > 0 && rs[start - 1].c > rs[start].c {
        start -= 1;
    }
    let tail = &rs[start..];
    let lo = tail.last().unwrap().c;
    let hi = tail.first().unwrap().c;
    if tail.len() < 2 {
        return Err(Error::Span { got: tail.len(), need: 2 });
    }
    if !(target_c <= hi && target_c >= lo) {
        return Err(Error::OutOfRange { target: target_c, lo, hi });
    }
    for w in tail.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if target_c <= a.c && target_c >= b.c {
            let frac = (target_c - a.c) / (b.c - a.c);
            return Ok(a.lambda + frac * (b.lambda - a.lambda));
        }
    }
    unreachable!("target inside [lo, hi] must fall in some segment");
}
