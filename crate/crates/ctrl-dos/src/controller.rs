//! Gain synthesis and the defective Jordan structure of the closed loop.
//!
//! The gain places all n closed-loop poles at -lambda, which makes the
//! closed loop similar to the single Jordan block -lambda I + N. The basis
//! T_lambda of generalized eigenvectors (normalized the same way the worked
//! examples print them: first component of v1 is 1, later chain vectors pin
//! their last coordinate to 0) enters the decay coefficient through
//! ||T_lambda^{-1}|| and lambda_min((T_lambda^{-1})^T T_lambda^{-1}), so the
//! normalization is semantically load-bearing, not cosmetic.

use crate::error::{Error, Result};
use crate::numerics::matrix::{norm2, Matrix, Vector};
use crate::numerics::{eig, policy, solve};
use crate::plant::CanonicalSystem;

/// Pole-placement gain for one lambda: k_i = binom(n, i) lambda^i and the
/// applied feedback row u_row = (-k_n + a_n, ..., -k_1 + a_1).
#[derive(Clone, Debug)]
pub struct GainLambda {
    pub lambda: f64,
    pub k: Vector,
    pub u_row: Vector,
}

/// Jordan basis of the closed loop: A_cl = T (-lambda I + N) T^{-1} with N
/// the upper-shift nilpotent.
#[derive(Clone, Debug)]
pub struct JordanData {
    pub t_lambda: Matrix,
    pub t_lambda_inv: Matrix,
    pub nilpotent: Matrix,
    pub lambda: f64,
}

/// Event-trigger threshold: fire when |e_lambda| exceeds F |x_lambda|.
#[derive(Clone, Copy, Debug)]
pub struct TriggerThreshold {
    pub sigma: f64,
    pub f: f64,
}

/// ||N|| for the n x n upper shift: 1 for n >= 2, 0 for the scalar case.
pub(crate) fn shift_norm(n: usize) -> f64 {
    if n >= 2 {
        1.0
    } else {
        0.0
    }
}

/// Admissibility bound: the ISS argument behind the trigger threshold and
/// the decay coefficient needs lambda > ||N|| + 1/2.
pub fn admissible_bound(n: usize) -> f64 {
    shift_norm(n) + 0.5
}

pub fn synthesize_gain(n: usize, lambda: f64, a_coeffs: &[f64]) -> Result<GainLambda> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be positive")));
    }
    if a_coeffs.len() != n || n == 0 {
        return Err(Error::InvalidInput(format!(
            "expected {n} characteristic coefficients, got {}",
            a_coeffs.len()
        )));
    }
    let mut k = Vec::with_capacity(n);
    for i in 1..=n {
        let binom = num_integer::binomial(n as u64, i as u64) as f64;
        k.push(binom * lambda.powi(i as i32));
    }
    // u_row[j] pairs k_{n-j} with a_{n-j} (0-based j).
    let u_row: Vector = (0..n).map(|j| -k[n - 1 - j] + a_coeffs[n - 1 - j]).collect();
    Ok(GainLambda { lambda, k, u_row })
}

/// Closed-loop matrix Ac + Bc u_row: still companion, last row
/// (-binom(n,n) l^n, ..., -binom(n,1) l).
pub fn closed_loop(sys: &CanonicalSystem, g: &GainLambda) -> Matrix {
    let n = sys.n();
    let mut acl = sys.ac.clone();
    for j in 0..n {
        acl[(n - 1, j)] += g.u_row[j];
    }
    acl
}

/// Rank-one input contribution Bc u_row.
pub fn bk_matrix(sys: &CanonicalSystem, g: &GainLambda) -> Matrix {
    let n = sys.n();
    Matrix::from_fn(n, n, |i, j| sys.bc[(i, 0)] * g.u_row[j])
}

/// Generalized-eigenvector chain for the defective pole at -lambda:
/// (A_cl + lambda I) v_1 = 0 with first component 1, and
/// (A_cl + lambda I) v_{j+1} = v_j with the last coordinate pinned to 0.
pub fn jordan_chain(acl: &Matrix, lambda: f64) -> Result<JordanData> {
    let n = acl.rows();
    if !acl.is_square() || n == 0 {
        return Err(Error::InvalidInput("closed loop must be square".into()));
    }
    let mut m = acl.clone();
    for i in 0..n {
        m[(i, i)] += lambda;
    }

    let mut t = Matrix::zeros(n, n);
    let v1 = if n == 1 {
        vec![1.0]
    } else {
        // Pin v1[0] = 1: solve the dropped-column system M[:,1..] w = -M[:,0].
        let rhs: Vector = (0..n).map(|i| -m[(i, 0)]).collect();
        let w = solve::ls_solve_dropped(&m, &rhs, 0)
            .map_err(|_| chain_conditioning_error(lambda))?;
        let mut v = Vec::with_capacity(n);
        v.push(1.0);
        v.extend_from_slice(&w);
        let resid = norm2(&m.mul_vec(&v));
        let scale = m.transpose().norm_one() * norm2(&v);
        if !(resid <= policy::SOLVE_RESIDUAL_REL * scale) {
            return Err(chain_conditioning_error(lambda));
        }
        v
    };
    t.set_col(0, &v1);

    let mut prev = v1;
    for j in 1..n {
        let v = solve::least_squares_particular(&m, &prev, n - 1)
            .map_err(|_| chain_conditioning_error(lambda))?;
        t.set_col(j, &v);
        prev = v;
    }

    let t_inv = solve::inverse(&t).map_err(|_| chain_conditioning_error(lambda))?;

    let cond = eig::spectral_norm(&t)? * eig::spectral_norm(&t_inv)?;
    if !cond.is_finite() || cond > policy::JORDAN_CONDITION_CAP {
        return Err(Error::NumericalFailure(format!(
            "cond(T_lambda) = {cond:e} exceeds the cap {:e} at lambda = {lambda}",
            policy::JORDAN_CONDITION_CAP
        )));
    }

    let mut nilpotent = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        nilpotent[(i, i + 1)] = 1.0;
    }

    // The basis must actually reproduce the closed loop; this is the
    // precision certificate that survives the huge condition numbers of
    // large lambda (T has the structure Lambda C Lambda^{-1}, so the
    // reconstruction stays entrywise accurate).
    let mut jordan = nilpotent.clone();
    for i in 0..n {
        jordan[(i, i)] -= lambda;
    }
    let recon = &(&t * &jordan) * &t_inv;
    let denom = eig::spectral_norm(acl)?;
    let resid = eig::spectral_norm(&(&recon - acl))? / denom.max(f64::MIN_POSITIVE);
    if !(resid <= policy::JORDAN_RECONSTRUCT_REL) {
        return Err(Error::NumericalFailure(format!(
            "Jordan reconstruction residual {resid:e} exceeds {:e} at lambda = {lambda}",
            policy::JORDAN_RECONSTRUCT_REL
        )));
    }

    Ok(JordanData { t_lambda: t, t_lambda_inv: t_inv, nilpotent, lambda })
}

fn chain_conditioning_error(lambda: f64) -> Error {
    Error::NumericalFailure(format!(
        "generalized-eigenvector chain solve failed at lambda = {lambda} (conditioning)"
    ))
}

/// Event-trigger threshold F = sqrt(sigma (2 lambda - 1 - 2||N||)) divided by
/// ||T^{-1} B K T||.
pub fn trigger_threshold(
    jd: &JordanData,
    g: &GainLambda,
    b: &Matrix,
    sigma: f64,
) -> Result<TriggerThreshold> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    let n = jd.t_lambda.rows();
    let norm_n = eig::spectral_norm(&jd.nilpotent)?;
    let bound = norm_n + 0.5;
    if !(g.lambda > bound) {
        return Err(Error::InadmissibleLambda { lambda: g.lambda, bound });
    }
    let bk = Matrix::from_fn(n, n, |i, j| b[(i, 0)] * g.u_row[j]);
    let sandwich = &(&jd.t_lambda_inv * &bk) * &jd.t_lambda;
    let denom = eig::spectral_norm(&sandwich)?;
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::NumericalFailure(
            "||T^-1 B K T|| is degenerate; cannot form the trigger threshold".into(),
        ));
    }
    let f = (sigma * (2.0 * g.lambda - 1.0 - 2.0 * norm_n)).sqrt() / denom;
    Ok(TriggerThreshold { sigma, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{charpoly, LtiSystem};

    fn canon3() -> CanonicalSystem {
        let a = Matrix::from_vec(3, 3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -3.0, -2.0, 3.0]);
        let b = Matrix::from_vec(3, 1, vec![0.0, 0.0, 1.0]);
        LtiSystem::new(a, b).unwrap().to_canonical().unwrap()
    }

    fn canon5() -> CanonicalSystem {
        let a = Matrix::from_vec(
            5,
            5,
            vec![
                0.0, 1.0, 0.0, 0.0, 0.0,
                0.0, 0.0, 1.0, 0.0, 0.0,
                0.0, 0.0, 0.0, 1.0, 0.0,
                0.0, 0.0, 0.0, 0.0, 1.0,
                -7.0, 10.0, -3.0, 4.0, -6.0,
            ],
        );
        let b = Matrix::from_vec(5, 1, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        LtiSystem::new(a, b).unwrap().to_canonical().unwrap()
    }

    #[test]
    fn gain_row_matches_worked_three_state_system() {
        let canon = canon3();
        for lambda in [2.0, 10.0, 100.0] {
            let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
            let l3 = lambda * lambda * lambda;
            let expect = [
                -l3 + 3.0,
                -3.0 * lambda * lambda + 2.0,
                -3.0 * lambda - 3.0,
            ];
            for (u, e) in g.u_row.iter().zip(expect) {
                assert!((u - e).abs() <= 1e-12 * e.abs().max(1.0), "lambda {lambda}");
            }
        }
    }

    #[test]
    fn scalar_case_places_single_pole() {
        let g = synthesize_gain(1, 2.0, &[5.0]).unwrap();
        assert_eq!(g.k, vec![2.0]);
        assert_eq!(g.u_row, vec![3.0]); // -k_1 + a_1 = -2 + 5
    }

    #[test]
    fn closed_loop_last_rows() {
        let canon = canon3();
        let lambda = 7.0;
        let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
        let acl = closed_loop(&canon, &g);
        let expect = [-lambda.powi(3), -3.0 * lambda * lambda, -3.0 * lambda];
        for j in 0..3 {
            assert!((acl[(2, j)] - expect[j]).abs() < 1e-9 * expect[j].abs());
        }

        let canon5 = canon5();
        let g5 = synthesize_gain(5, lambda, &canon5.a_coeffs).unwrap();
        let acl5 = closed_loop(&canon5, &g5);
        let expect5 = [
            -lambda.powi(5),
            -5.0 * lambda.powi(4),
            -10.0 * lambda.powi(3),
            -10.0 * lambda * lambda,
            -5.0 * lambda,
        ];
        for j in 0..5 {
            assert!((acl5[(4, j)] - expect5[j]).abs() < 1e-9 * expect5[j].abs());
        }
    }

    #[test]
    fn charpoly_certificate_for_binomial_coefficients() {
        // charpoly(A + B K) = (s + lambda)^n, certified through the
        // coefficients; numerical eigenvalues of a defective matrix would be
        // hopeless at these conditionings.
        let canon = canon3();
        let lambda = 1.0;
        let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
        let acl = closed_loop(&canon, &g);
        let c = charpoly(&acl);
        let expect = [3.0, 3.0, 1.0]; // (s+1)^3 = s^3 + 3s^2 + 3s + 1
        for (x, e) in c.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn defective_pole_has_geometric_multiplicity_one() {
        let canon = canon3();
        let lambda = 4.0;
        let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
        let mut m = closed_loop(&canon, &g);
        for i in 0..3 {
            m[(i, i)] += lambda;
        }
        assert_eq!(solve::rank_via_pivoted_qr(&m, 1e-9), 2);
    }

    #[test]
    fn jordan_chain_matches_rational_expressions() {
        let canon = canon3();
        for lambda in [2.0f64, 10.0, 100.0] {
            let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
            let jd = jordan_chain(&closed_loop(&canon, &g), lambda).unwrap();
            let cols = [
                vec![1.0, -lambda, lambda * lambda],
                vec![2.0 / lambda, -1.0, 0.0],
                vec![3.0 / (lambda * lambda), -1.0 / lambda, 0.0],
            ];
            for (j, expect) in cols.iter().enumerate() {
                for i in 0..3 {
                    let got = jd.t_lambda[(i, j)];
                    let tol = 1e-9 * expect[i].abs().max(1e-30);
                    assert!(
                        (got - expect[i]).abs() <= tol.max(1e-25),
                        "lambda {lambda} col {j} row {i}: {got} vs {}",
                        expect[i]
                    );
                }
            }
        }
    }

    #[test]
    fn five_state_chain_matches_rational_expressions() {
        let canon = canon5();
        for lambda in [2.0f64, 10.0, 100.0] {
            let g = synthesize_gain(5, lambda, &canon.a_coeffs).unwrap();
            let jd = jordan_chain(&closed_loop(&canon, &g), lambda).unwrap();
            let l = lambda;
            let cols = [
                vec![1.0, -l, l * l, -l * l * l, l * l * l * l],
                vec![4.0 / l, -3.0, 2.0 * l, -l * l, 0.0],
                vec![10.0 / (l * l), -6.0 / l, 3.0, -l, 0.0],
                vec![20.0 / (l * l * l), -10.0 / (l * l), 4.0 / l, -1.0, 0.0],
                vec![35.0 / (l * l * l * l), -15.0 / (l * l * l), 5.0 / (l * l), -1.0 / l, 0.0],
            ];
            for (j, expect) in cols.iter().enumerate() {
                for i in 0..5 {
                    let got = jd.t_lambda[(i, j)];
                    let tol = (1e-9 * expect[i].abs()).max(1e-22);
                    assert!(
                        (got - expect[i]).abs() <= tol,
                        "lambda {lambda} col {j} row {i}: {got} vs {}",
                        expect[i]
                    );
                }
            }
        }
    }

    #[test]
    fn admissibility_boundary_is_rejected() {
        let canon = canon3();
        let g = synthesize_gain(3, 1.5, &canon.a_coeffs).unwrap();
        let jd = jordan_chain(&closed_loop(&canon, &g), 1.5).unwrap();
        match trigger_threshold(&jd, &g, &canon.bc, 0.1) {
            Err(Error::InadmissibleLambda { bound, .. }) => assert!((bound - 1.5).abs() < 1e-14),
            other => panic!("expected InadmissibleLambda, got {other:?}"),
        }
    }

    #[test]
    fn threshold_vanishes_with_sigma() {
        let canon = canon3();
        let g = synthesize_gain(3, 10.0, &canon.a_coeffs).unwrap();
        let jd = jordan_chain(&closed_loop(&canon, &g), 10.0).unwrap();
        let f1 = trigger_threshold(&jd, &g, &canon.bc, 0.1).unwrap().f;
        let f2 = trigger_threshold(&jd, &g, &canon.bc, 0.001).unwrap().f;
        assert!(f2 < f1 / 5.0);
        assert!(trigger_threshold(&jd, &g, &canon.bc, 1.0).is_err());
        assert!(trigger_threshold(&jd, &g, &canon.bc, 0.0).is_err());
    }
}
