//! Python bindings: one `Design` class wrapping a plant and its canonical
//! form, with methods for gain synthesis, inter-event time, trigger
//! threshold, Jordan data, decay analysis, threshold sweep, and both
//! simulation modes. Everything crosses the boundary as plain floats,
//! lists, and tuples; library errors surface as ValueError.

use ctrl_dos::analysis::{analyze_lambda, sweep, AnalysisOptions};
use ctrl_dos::controller::{
    closed_loop, jordan_chain, synthesize_gain, trigger_threshold,
};
use ctrl_dos::numerics::matrix::{norm2, Matrix};
use ctrl_dos::plant::{CanonicalSystem, JammerProfile, LtiSystem};
use ctrl_dos::simulator::{
    run_event_triggered, run_jammed, SimConfig, SimMode, SimOutcome, SimTrace,
};
use ctrl_dos::trigger::{build_schedule, compute_tau};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: ctrl_dos::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

#[pyclass]
struct Design {
    sys: LtiSystem,
    canon: CanonicalSystem,
}

#[pymethods]
impl Design {
    /// Design(n, a, b): a is the n*n system matrix in row-major order,
    /// b the input column. Fails if (A, B) is not controllable.
    #[new]
    fn new(n: usize, a: Vec<f64>, b: Vec<f64>) -> PyResult<Self> {
        if a.len() != n * n {
            return Err(PyValueError::new_err(format!(
                "a has {} entries, expected {}",
                a.len(),
                n * n
            )));
        }
        if b.len() != n {
            return Err(PyValueError::new_err(format!(
                "b has {} entries, expected {n}",
                b.len()
            )));
        }
        let sys = LtiSystem::new(Matrix::from_vec(n, n, a), Matrix::column(&b)).map_err(err)?;
        let canon = sys.to_canonical().map_err(err)?;
        Ok(Design { sys, canon })
    }

    /// (Ac rows, Bc column, P rows, charpoly coefficients a1..an).
    fn canonical(&self) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let bc: Vec<f64> = (0..self.canon.n()).map(|i| self.canon.bc[(i, 0)]).collect();
        (
            rows(&self.canon.ac),
            bc,
            rows(&self.canon.p),
            self.canon.a_coeffs.clone(),
        )
    }

    /// (k coefficients, canonical feedback row) for the n-fold pole -lambda.
    fn gain(&self, lam: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        Ok((g.k, g.u_row))
    }

    /// Minimal inter-event time at trigger level sigma.
    fn tau(&self, lam: f64, sigma: f64) -> PyResult<f64> {
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        Ok(compute_tau(&self.canon, &g, sigma).map_err(err)?.tau_lambda)
    }

    /// Relative trigger threshold F(lam, sigma).
    fn threshold(&self, lam: f64, sigma: f64) -> PyResult<f64> {
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        let jd = jordan_chain(&closed_loop(&self.canon, &g), lam).map_err(err)?;
        Ok(trigger_threshold(&jd, &g, &self.canon.bc, sigma).map_err(err)?.f)
    }

    /// (T rows, T^-1 rows) of the Jordan chain basis.
    fn jordan(&self, lam: f64) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        let jd = jordan_chain(&closed_loop(&self.canon, &g), lam).map_err(err)?;
        Ok((rows(&jd.t_lambda), rows(&jd.t_lambda_inv)))
    }

    /// (tau, C1, C2, C3, C) under the worst-case periodic jammer.
    fn decay(
        &self,
        lam: f64,
        sigma: f64,
        period: f64,
        t_off_cr: f64,
    ) -> PyResult<(f64, f64, f64, f64, f64)> {
        let jam = JammerProfile::new(period, t_off_cr).map_err(err)?;
        let r = analyze_lambda(&self.canon, &jam, sigma, lam, AnalysisOptions::default())
            .map_err(err)?;
        Ok((r.tau_lambda, r.c1, r.c2, r.c3, r.c))
    }

    /// Sweep a lambda grid: ([(lambda, tau, C)], lambda_bar or None).
    #[pyo3(name = "sweep")]
    fn sweep_grid(
        &self,
        lambdas: Vec<f64>,
        sigma: f64,
        period: f64,
        t_off_cr: f64,
    ) -> PyResult<(Vec<(f64, f64, f64)>, Option<f64>)> {
        let jam = JammerProfile::new(period, t_off_cr).map_err(err)?;
        let res = sweep(&self.canon, &jam, sigma, &lambdas, AnalysisOptions::default())
            .map_err(err)?;
        let rows = res
            .reports
            .iter()
            .map(|r| (r.lambda, r.tau_lambda, r.c))
            .collect();
        Ok((rows, res.lambda_bar))
    }

    /// Closed loop under the jammer-aware schedule:
    /// (per-period |x(pT)|, total updates, outcome string).
    #[pyo3(signature = (lam, sigma, period, t_off_cr, x0, periods, output_dt))]
    fn simulate_jammed(
        &self,
        lam: f64,
        sigma: f64,
        period: f64,
        t_off_cr: f64,
        x0: Vec<f64>,
        periods: u32,
        output_dt: f64,
    ) -> PyResult<(Vec<f64>, u64, String)> {
        let jam = JammerProfile::new(period, t_off_cr).map_err(err)?;
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        let tau = compute_tau(&self.canon, &g, sigma).map_err(err)?;
        let schedule = build_schedule(&tau, &jam, periods, false).map_err(err)?;
        let cfg = SimConfig {
            x0,
            n_periods: periods,
            output_dt,
            lambda: lam,
            sigma,
            mode: SimMode::JammedSchedule,
        };
        let trace = run_jammed(&self.sys, &g, &schedule, &cfg).map_err(err)?;
        let outcome = match trace.outcome {
            SimOutcome::Completed => "completed".to_string(),
            SimOutcome::Diverged { t } => format!("diverged at t = {t:e}"),
        };
        Ok((boundary_norms(&trace), trace.total_events, outcome))
    }

    /// Pure event-triggered run on a free channel:
    /// (event times, per-period |x|, total events).
    #[pyo3(signature = (lam, sigma, x0, horizon, output_dt, periods))]
    fn simulate_event(
        &self,
        lam: f64,
        sigma: f64,
        x0: Vec<f64>,
        horizon: f64,
        output_dt: f64,
        periods: u32,
    ) -> PyResult<(Vec<f64>, Vec<f64>, u64)> {
        let g = synthesize_gain(self.canon.n(), lam, &self.canon.a_coeffs).map_err(err)?;
        let jd = jordan_chain(&closed_loop(&self.canon, &g), lam).map_err(err)?;
        let thr = trigger_threshold(&jd, &g, &self.canon.bc, sigma).map_err(err)?;
        let cfg = SimConfig {
            x0,
            n_periods: periods,
            output_dt,
            lambda: lam,
            sigma,
            mode: SimMode::EventTriggered,
        };
        let trace = run_event_triggered(&self.sys, &g, &jd, &thr, &cfg, horizon).map_err(err)?;
        let norms = boundary_norms(&trace);
        Ok((trace.event_times, norms, trace.total_events))
    }
}

/// Norm at every period boundary including t = 0, matching the CLI metrics rows.
fn boundary_norms(trace: &SimTrace) -> Vec<f64> {
    let mut norms = Vec::with_capacity(trace.period_norms.len() + 1);
    if let Some(first) = trace.samples.first() {
        norms.push(norm2(&first.x));
    }
    norms.extend_from_slice(&trace.period_norms);
    norms
}

#[pymodule]
fn ctrl_dos_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Design>()?;
    Ok(())
}
