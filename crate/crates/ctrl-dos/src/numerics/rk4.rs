//! Classical fixed-step RK4. Deterministic across platforms by design: the
//! phi ODE behind the inter-event time is smooth and short-horizon, so an
//! adaptive integrator would add reproducibility headaches for no accuracy.

use crate::error::{Error, Result};

/// One RK4 step of size h from (t, y).
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let n = y.len();
    let k1 = f(t, y);
    let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = f(t + 0.5 * h, &y2);
    let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = f(t + 0.5 * h, &y3);
    let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
    let k4 = f(t + h, &y4);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrate y' = f(t, y) from t0 to t1 with fixed step h; the last partial
/// step is shortened to land exactly on t1.
pub fn rk4_integrate<F>(f: F, y0: &[f64], t0: f64, t1: f64, h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step h = {h} must be positive")));
    }
    if t1 < t0 {
        return Err(Error::InvalidParameter(format!("t1 = {t1} must not precede t0 = {t0}")));
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    while t < t1 {
        let step = h.min(t1 - t);
        y = rk4_step(&f, t, &y, step);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "state became non-finite near t = {t}"
            )));
        }
        t += step;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_constant() {
        let y = rk4_integrate(|_, y| vec![0.0; y.len()], &[1.0, -2.0], 0.0, 3.0, 0.1).unwrap();
        assert_eq!(y, vec![1.0, -2.0]);
    }

    #[test]
    fn scalar_exponential() {
        let y = rk4_integrate(|_, y| vec![y[0]], &[1.0], 0.0, 1.0, 1e-3).unwrap();
        assert!((y[0] - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn partial_last_step_lands_on_t1() {
        // 0.25 is not a multiple of 0.1; y' = 1 must still give exactly t1 - t0.
        let y = rk4_integrate(|_, _| vec![1.0], &[0.0], 0.0, 0.25, 0.1).unwrap();
        assert!((y[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(rk4_integrate(|_, _| vec![0.0], &[0.0], 0.0, 1.0, 0.0).is_err());
        assert!(rk4_integrate(|_, _| vec![0.0], &[0.0], 1.0, 0.0, 0.1).is_err());
    }
}
