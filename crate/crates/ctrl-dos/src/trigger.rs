//! Minimal inter-event time tau_lambda and the jammer-aware trigger schedule.
//!
//! tau_lambda comes from the scalar comparison ODE
//!     phi' = a + (a + b) phi + b phi^2,   a = ||A_cl||, b = ||B K_lambda||,
//! integrated from phi(0) = 0 until the first crossing of the stopping level
//! (sigma by default). Any inter-event interval of the event-triggered loop
//! is at least that crossing time, so the schedule below can sample at
//! multiples of tau_lambda without ever outrunning the trigger rule.

use crate::controller::{admissible_bound, bk_matrix, closed_loop, GainLambda};
use crate::error::{Error, Result};
use crate::numerics::{eig, policy, rk4};
use crate::plant::{CanonicalSystem, JammerProfile};

/// Crossing time of the comparison ODE plus the integration trace that
/// produced it (march points and the bisected endpoint).
#[derive(Clone, Debug)]
pub struct TauResult {
    pub tau_lambda: f64,
    pub phi_trace: Vec<(f64, f64)>,
}

pub fn compute_tau(sys: &CanonicalSystem, g: &GainLambda, sigma: f64) -> Result<TauResult> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in (0, 1)")));
    }
    let bound = admissible_bound(sys.n());
    if !(g.lambda > bound) {
        return Err(Error::InadmissibleLambda { lambda: g.lambda, bound });
    }
    compute_tau_at_level(sys, g, sigma)
}

/// Same integration with an arbitrary positive stopping level; used by the
/// investigation flag that stops at the trigger threshold F(lambda) instead
/// of sigma. Admissibility is the caller's business here.
pub fn compute_tau_at_level(
    sys: &CanonicalSystem,
    g: &GainLambda,
    level: f64,
) -> Result<TauResult> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::InvalidParameter(format!("stopping level {level} must be positive")));
    }
    let a = eig::spectral_norm(&closed_loop(sys, g))?;
    let b = eig::spectral_norm(&bk_matrix(sys, g))?;
    if !(a > 0.0) {
        return Err(Error::NumericalFailure(
            "closed loop has zero norm; comparison ODE is degenerate".into(),
        ));
    }

    let rhs = |phi: f64| a + (a + b) * phi + b * phi * phi;
    let step = |t: f64, phi: f64, h: f64| -> f64 {
        let f = |_: f64, y: &[f64]| vec![rhs(y[0])];
        rk4::rk4_step(&f, t, &[phi], h)[0]
    };

    // phi' >= a, so the crossing happens no later than level/a; 100 steps
    // to get there keeps the local truncation error far below the time
    // tolerance even when lambda (and hence a) is enormous.
    let tau_est = level / a;
    let h = (tau_est / 100.0).min(1e-4);

    let mut t = 0.0;
    let mut phi = 0.0;
    let mut trace = vec![(0.0, 0.0)];
    let (t_lo, phi_lo, t_hi) = loop {
        if t > policy::TAU_HORIZON {
            return Err(Error::NoCrossing { level, horizon: policy::TAU_HORIZON });
        }
        let next = step(t, phi, h);
        if !next.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "comparison ODE overflowed at t = {t:e} (lambda = {})",
                g.lambda
            )));
        }
        if next >= level {
            break (t, phi, t + h);
        }
        t += h;
        phi = next;
        trace.push((t, phi));
    };

    // Bisect inside [t_lo, t_hi]; every probe is a single RK4 step from the
    // bracket's left march point, so probe error does not accumulate.
    let mut lo = t_lo;
    let mut hi = t_hi;
    let mut tau = hi;
    let mut phi_tau = step(t_lo, phi_lo, hi - t_lo);
    for _ in 0..200 {
        if hi - lo <= policy::TAU_TIME_ABS && (phi_tau - level).abs() <= policy::TAU_PHI_ABS {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Adjacent floats; the bracket cannot shrink further.
            break;
        }
        let phi_mid = step(t_lo, phi_lo, mid - t_lo);
        if phi_mid >= level {
            hi = mid;
            tau = mid;
            phi_tau = phi_mid;
        } else {
            lo = mid;
        }
    }
    if !((hi - lo) <= policy::TAU_TIME_ABS && (phi_tau - level).abs() <= policy::TAU_PHI_ABS) {
        return Err(Error::NumericalFailure(format!(
            "tau bisection stalled: bracket {:e}, level residual {:e}",
            hi - lo,
            (phi_tau - level).abs()
        )));
    }
    trace.push((tau, phi_tau));
    Ok(TauResult { tau_lambda: tau, phi_trace: trace })
}

/// Trigger tag: an l-th multiple of tau_lambda inside a sleep window, or the
/// forced update that closes period p.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriggerKind {
    Multiple(u64),
    PeriodEnd(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriggerEvent {
    pub t: f64,
    pub kind: TriggerKind,
}

/// Inclusive multiple range for one period; lo > hi encodes "no multiples
/// land in this period's sleep window".
#[derive(Clone, Copy, Debug)]
struct PeriodMultiples {
    lo: u64,
    hi: u64,
}

/// Compact trigger schedule over [0, n_periods * T]. Periods are stored as
/// multiple ranges, never as explicit times: at large lambda a single window
/// holds billions of multiples.
#[derive(Clone, Debug)]
pub struct TriggerSchedule {
    tau: f64,
    period: f64,
    t_off_cr: f64,
    resync: bool,
    periods: Vec<PeriodMultiples>,
    total: u64,
}

impl TriggerSchedule {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn t_off_cr(&self) -> f64 {
        self.t_off_cr
    }

    pub fn n_periods(&self) -> u32 {
        self.periods.len() as u32
    }

    /// Total number of trigger events including period ends.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Multiple range (inclusive) for period p (1-based); None when the
    /// window holds no multiple.
    pub fn multiples(&self, p: u32) -> Option<(u64, u64)> {
        let pm = self.periods[(p - 1) as usize];
        (pm.lo <= pm.hi).then_some((pm.lo, pm.hi))
    }

    fn event_time(&self, p: u32, l: u64) -> f64 {
        if self.resync {
            (p - 1) as f64 * self.period + l as f64 * self.tau
        } else {
            l as f64 * self.tau
        }
    }

    /// Lazy ascending walk over all events. Safe at any schedule size.
    pub fn iter(&self) -> impl Iterator<Item = TriggerEvent> + '_ {
        (1..=self.periods.len() as u32).flat_map(move |p| {
            let pm = self.periods[(p - 1) as usize];
            let multiples = (pm.lo..=pm.hi)
                .map(move |l| TriggerEvent { t: self.event_time(p, l), kind: TriggerKind::Multiple(l) });
            let end = std::iter::once(TriggerEvent {
                t: p as f64 * self.period,
                kind: TriggerKind::PeriodEnd(p),
            });
            multiples.chain(end)
        })
    }

    /// Materialized times; meant for small schedules (tests, demos).
    pub fn times(&self) -> Vec<f64> {
        self.iter().map(|e| e.t).collect()
    }
}

/// Absolute slack for boundary membership of l*tau in [start, start+T_off].
/// Pure float comparison would drop multiples that land on a window edge up
/// to rounding; this keeps the closed-interval semantics honest.
fn slack(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

pub fn build_schedule(
    tau: &TauResult,
    j: &JammerProfile,
    n_periods: u32,
    resync: bool,
) -> Result<TriggerSchedule> {
    let tau = tau.tau_lambda;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    if n_periods == 0 {
        return Err(Error::InvalidParameter("schedule needs at least one period".into()));
    }
    let t_off = j.t_off_cr();
    let period = j.period();
    if tau > t_off + slack(t_off) {
        return Err(Error::LambdaTooSmall { tau, t_off_cr: t_off });
    }
    // l is carried in u64 through float round-trips; past ~1e14 multiples per
    // period the floats themselves can no longer separate adjacent triggers.
    if period / tau > 1e14 {
        return Err(Error::NumericalFailure(format!(
            "period/tau = {:e} exceeds the representable schedule density",
            period / tau
        )));
    }

    let mut periods = Vec::with_capacity(n_periods as usize);
    let mut total: u64 = 0;
    for p in 1..=n_periods as u64 {
        let (mut lo, hi) = if resync {
            // Local window [0, t_off], l restarts at 1.
            (1, last_multiple_below(tau, t_off))
        } else {
            let start = (p - 1) as f64 * period;
            let lo = first_multiple_at_or_after(tau, start).max(1);
            let hi = last_multiple_below(tau, start + t_off);
            (lo, hi)
        };
        // A multiple that coincides with the previous period's forced update
        // would duplicate it; the forced update wins.
        if !resync && p >= 2 && lo <= hi {
            let start = (p - 1) as f64 * period;
            if (lo as f64 * tau - start).abs() <= slack(start) {
                lo += 1;
            }
        }
        if lo <= hi {
            total += hi - lo + 1;
        }
        periods.push(PeriodMultiples { lo, hi });
        total += 1; // PeriodEnd
    }

    Ok(TriggerSchedule { tau, period, t_off_cr: t_off, resync, periods, total })
}

/// Smallest l with l*tau >= x - slack(x).
fn first_multiple_at_or_after(tau: f64, x: f64) -> u64 {
    let s = slack(x);
    let mut l = ((x - s) / tau).ceil().max(0.0) as u64;
    while l as f64 * tau < x - s {
        l += 1;
    }
    while l > 0 && (l - 1) as f64 * tau >= x - s {
        l -= 1;
    }
    l
}

/// Largest l with l*tau <= x + slack(x); 0 when none.
fn last_multiple_below(tau: f64, x: f64) -> u64 {
    let s = slack(x);
    let mut l = ((x + s) / tau).floor().max(0.0) as u64;
    while l as f64 * tau > x + s {
        l = l.saturating_sub(1);
    }
    while (l + 1) as f64 * tau <= x + s {
        l += 1;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::synthesize_gain;
    use crate::numerics::matrix::Matrix;
    use crate::plant::LtiSystem;

    fn canon3() -> CanonicalSystem {
        let a = Matrix::from_vec(3, 3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -3.0, -2.0, 3.0]);
        let b = Matrix::from_vec(3, 1, vec![0.0, 0.0, 1.0]);
        LtiSystem::new(a, b).unwrap().to_canonical().unwrap()
    }

    fn tau_of(lambda: f64, sigma: f64) -> f64 {
        let canon = canon3();
        let g = synthesize_gain(3, lambda, &canon.a_coeffs).unwrap();
        compute_tau(&canon, &g, sigma).unwrap().tau_lambda
    }

    #[test]
    fn tau_monotone_in_sigma_and_lambda() {
        let t_small = tau_of(10.0, 0.02);
        let t_big = tau_of(10.0, 0.2);
        assert!(t_small < t_big);

        let t2 = tau_of(2.0, 0.1);
        let t10 = tau_of(10.0, 0.1);
        assert!(t10 < 0.5 * t2);
        // Fixed-point bands for the worked system at sigma = 0.1.
        assert!(t2 > 4e-3 && t2 < 8e-3, "tau(2) = {t2}");
        assert!(t10 > 8e-5 && t10 < 9.5e-5, "tau(10) = {t10}");
    }

    #[test]
    fn tau_rejects_inadmissible_lambda() {
        let canon = canon3();
        let g = synthesize_gain(3, 1.2, &canon.a_coeffs).unwrap();
        assert!(matches!(
            compute_tau(&canon, &g, 0.1),
            Err(Error::InadmissibleLambda { .. })
        ));
    }

    #[test]
    fn tau_trace_brackets_the_crossing() {
        let canon = canon3();
        let g = synthesize_gain(3, 5.0, &canon.a_coeffs).unwrap();
        let r = compute_tau(&canon, &g, 0.1).unwrap();
        let (t_end, phi_end) = *r.phi_trace.last().unwrap();
        assert_eq!(t_end, r.tau_lambda);
        assert!((phi_end - 0.1).abs() <= 1e-9);
        // March points stay strictly below the level.
        for &(_, phi) in &r.phi_trace[..r.phi_trace.len() - 1] {
            assert!(phi < 0.1);
        }
    }

    fn fixed_tau(t: f64) -> TauResult {
        TauResult { tau_lambda: t, phi_trace: vec![] }
    }

    #[test]
    fn schedule_worked_example() {
        let j = JammerProfile::new(1.0, 0.1).unwrap();
        let s = build_schedule(&fixed_tau(0.03), &j, 1, false).unwrap();
        let times = s.times();
        let expect = [0.03, 0.06, 0.09, 1.0];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_boundary_multiple_included() {
        let j = JammerProfile::new(1.0, 0.1).unwrap();
        let s = build_schedule(&fixed_tau(0.1), &j, 1, false).unwrap();
        let times = s.times();
        assert_eq!(times.len(), 2);
        assert!((times[0] - 0.1).abs() < 1e-12);
        assert!((times[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_identity_and_last_multiple_bound() {
        let j = JammerProfile::new(1.0, 0.37).unwrap();
        for tau in [0.0133, 0.037, 0.07, 0.123, 0.185] {
            let s = build_schedule(&fixed_tau(tau), &j, 1, false).unwrap();
            let (lo, hi) = s.multiples(1).unwrap();
            let count = hi - lo + 1;
            assert_eq!(count, (0.37f64 / tau).floor() as u64, "tau = {tau}");
            // Last multiple sits past half the sleep window whenever
            // tau <= T_off/2.
            if tau <= 0.37 / 2.0 {
                assert!(hi as f64 * tau >= 0.37 / 2.0, "tau = {tau}");
            }
        }
    }

    #[test]
    fn schedule_rejects_large_tau() {
        let j = JammerProfile::new(1.0, 0.1).unwrap();
        assert!(matches!(
            build_schedule(&fixed_tau(0.2), &j, 1, false),
            Err(Error::LambdaTooSmall { .. })
        ));
    }

    #[test]
    fn global_multiples_dedupe_period_start() {
        // tau = 0.5, T = 1, T_off = 0.5: l = 2 lands exactly on the first
        // forced update; the schedule must not emit it twice.
        let j = JammerProfile::new(1.0, 0.5).unwrap();
        let s = build_schedule(&fixed_tau(0.5), &j, 2, false).unwrap();
        let times = s.times();
        let expect = [0.5, 1.0, 1.5, 2.0];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for w in times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn global_indexing_carries_the_counter_across_periods() {
        // T_off = 0.05, tau = 0.04: period 1 holds l=1 (0.04). In period 2
        // the candidates are l=25 (exactly the forced update at 1.0, so the
        // dedupe drops it) and l=26 (1.04).
        let j = JammerProfile::new(1.0, 0.05).unwrap();
        let s = build_schedule(&fixed_tau(0.04), &j, 2, false).unwrap();
        let (lo1, hi1) = s.multiples(1).unwrap();
        assert_eq!((lo1, hi1), (1, 1));
        let (lo2, hi2) = s.multiples(2).unwrap();
        assert_eq!((lo2, hi2), (26, 26));
        let times = s.times();
        let expect = [0.04, 1.0, 1.04, 2.0];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn resync_restarts_multiples_each_period() {
        let j = JammerProfile::new(1.0, 0.1).unwrap();
        let s = build_schedule(&fixed_tau(0.03), &j, 2, true).unwrap();
        let times = s.times();
        let expect = [0.03, 0.06, 0.09, 1.0, 1.03, 1.06, 1.09, 2.0];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn iter_is_strictly_increasing_modulo_coincidence() {
        let j = JammerProfile::new(0.7, 0.2).unwrap();
        let s = build_schedule(&fixed_tau(0.037), &j, 5, false).unwrap();
        let times = s.times();
        assert_eq!(times.len() as u64, s.len());
        for w in times.windows(2) {
            assert!(w[1] > w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }
}
