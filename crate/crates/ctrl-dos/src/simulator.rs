//! Closed-loop time-domain simulation.
//!
//! Between control updates the plant is an LTI system with a constant input,
//! so every advance uses the exact propagator from the augmented exponential
//! expm([[A, BK], [0, 0]] dt) = [[E_A, Phi], [0, I]]: with the hold state
//! equal to the segment's start state, x(t0+dt) = (E_A + Phi) x(t0). No
//! integration error accumulates over the long sub-threshold divergence
//! demos, and dense jammed schedules (billions of triggers per period at
//! large lambda) collapse to binary powers of the one-gap propagator.

use crate::controller::{bk_matrix, GainLambda, JordanData, TriggerThreshold};
use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, norm2, Matrix, Vector};
use crate::numerics::{expm, policy, solve};
use crate::plant::{JammerProfile, JammerState, LtiSystem};
use crate::trigger::{TriggerKind, TriggerSchedule};

/// Above this many schedule entries the jammed run switches from walking
/// triggers one by one to the matrix-power fast path.
const EXPLICIT_SCHEDULE_MAX: u64 = 4096;
/// Event monitoring runs this many steps per output sample.
const MONITOR_SUBDIV: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimMode {
    JammedSchedule,
    EventTriggered,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub x0: Vector,
    pub n_periods: u32,
    pub output_dt: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub mode: SimMode,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub t: f64,
    /// State in the original (pre-canonical) coordinates.
    pub x: Vector,
    pub u: f64,
    pub jammer: JammerState,
    pub triggered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SimOutcome {
    Completed,
    /// State norm crossed the divergence cutoff; the trace is truncated at t.
    Diverged { t: f64 },
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub samples: Vec<Sample>,
    /// |x(pT)| in original coordinates, p = 1..n_periods.
    pub period_norms: Vec<f64>,
    /// Trigger instants the run materialized. The fast path stores only
    /// window edges and period ends; total_events counts the whole schedule.
    pub event_times: Vec<f64>,
    pub total_events: u64,
    pub outcome: SimOutcome,
}

#[derive(Clone, Debug)]
pub struct DecayMetrics {
    /// |x(pT)| for p = 0..n_periods (index 0 is the initial state).
    pub norms: Vec<f64>,
    /// ratios[p] = norms[p+1] / norms[p]; None when the denominator is zero.
    pub ratios: Vec<Option<f64>>,
    pub contracting: bool,
}

fn tie(t: f64) -> f64 {
    1e-9 * t.abs().max(1.0)
}

/// Exact constant-input propagator with a one-slot memo (the jammed
/// explicit path hits the same dt for every uniform gap).
struct Propagator {
    aug: Matrix,
    n: usize,
    memo: Option<(u64, Matrix)>,
}

impl Propagator {
    fn new(ac: &Matrix, bk: &Matrix) -> Self {
        let n = ac.rows();
        let aug = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            if i < n && j < n {
                ac[(i, j)]
            } else if i < n {
                bk[(i, j - n)]
            } else {
                0.0
            }
        });
        Propagator { aug, n, memo: None }
    }

    /// (E_A, Phi) blocks of expm(aug * dt).
    fn pair(&self, dt: f64) -> Result<(Matrix, Matrix)> {
        let e = expm::expm(&self.aug.scale(dt))?;
        let n = self.n;
        let ea = Matrix::from_fn(n, n, |i, j| e[(i, j)]);
        let phi = Matrix::from_fn(n, n, |i, j| e[(i, j + n)]);
        Ok((ea, phi))
    }

    /// E_A + Phi: maps the segment-start state to the state dt later when
    /// the hold equals the segment-start state.
    fn prop(&mut self, dt: f64) -> Result<Matrix> {
        if let Some((bits, m)) = &self.memo {
            if *bits == dt.to_bits() {
                return Ok(m.clone());
            }
        }
        let (ea, phi) = self.pair(dt)?;
        let m = &ea + &phi;
        self.memo = Some((dt.to_bits(), m.clone()));
        Ok(m)
    }
}

/// Binary powers of the one-gap propagator S; powers[k] = S^(2^k).
struct PowerCache {
    powers: Vec<Matrix>,
}

impl PowerCache {
    fn new(base: Matrix) -> Self {
        PowerCache { powers: vec![base] }
    }

    fn apply(&mut self, z: &[f64], mut m: u64) -> Vector {
        let mut v = z.to_vec();
        let mut k = 0;
        while m > 0 {
            if k == self.powers.len() {
                let last = self.powers.last().unwrap();
                self.powers.push(last * last);
            }
            if m & 1 == 1 {
                v = self.powers[k].mul_vec(&v);
            }
            m >>= 1;
            k += 1;
        }
        v
    }
}

/// Shared emission state for both jammed paths.
struct RunState<'a> {
    p: &'a Matrix,
    u_row: &'a [f64],
    jammer: JammerProfile,
    dt_out: f64,
    next_out: u64,
    samples: Vec<Sample>,
    period_norms: Vec<f64>,
    event_times: Vec<f64>,
    diverged: Option<f64>,
}

impl RunState<'_> {
    fn to_x(&self, z: &[f64]) -> Vector {
        self.p.mul_vec(z)
    }

    /// Divergence gate; on failure records the instant and suppresses the
    /// sample (a non-finite row helps nobody downstream).
    fn guard(&mut self, t: f64, x: &[f64]) -> bool {
        let n = norm2(x);
        if !n.is_finite() || n > policy::DIVERGENCE_NORM {
            self.diverged = Some(t);
            return false;
        }
        true
    }

    /// Emits a sample; hold is the state the control is frozen at.
    fn emit(&mut self, t: f64, x: Vector, hold: &[f64], triggered: bool) -> f64 {
        let n = norm2(&x);
        self.samples.push(Sample {
            t,
            x,
            u: dot(self.u_row, hold),
            jammer: self.jammer.state(t),
            triggered,
        });
        n
    }

    /// Output-grid samples strictly inside (t_from, t_to); the hold state is
    /// the segment start z_from. Stops early on divergence.
    fn emit_outputs_in(
        &mut self,
        prop: &mut Propagator,
        t_from: f64,
        z_from: &[f64],
        t_to: f64,
    ) -> Result<()> {
        loop {
            let t_out = self.next_out as f64 * self.dt_out;
            if t_out >= t_to - tie(t_to) {
                return Ok(());
            }
            if t_out > t_from + tie(t_from) {
                let zt = prop.prop(t_out - t_from)?.mul_vec(z_from);
                let xt = self.to_x(&zt);
                if !self.guard(t_out, &xt) {
                    return Ok(());
                }
                self.emit(t_out, xt, z_from, false);
            }
            self.next_out += 1;
        }
    }

    /// Skips output-grid points that coincide with an already-emitted
    /// trigger sample.
    fn skip_outputs_at(&mut self, t: f64) {
        while self.next_out as f64 * self.dt_out <= t + tie(t) {
            self.next_out += 1;
        }
    }

    /// Trigger-sample emission: guard, emit with fresh hold, dedupe grid.
    fn emit_trigger(&mut self, t: f64, z: &[f64]) -> Option<f64> {
        let x = self.to_x(z);
        if !self.guard(t, &x) {
            return None;
        }
        self.event_times.push(t);
        let n = self.emit(t, x, z, true);
        self.skip_outputs_at(t);
        Some(n)
    }

    /// Record |x| at every period instant inside (t_from, t_to], evaluated
    /// with the exact segment propagator from (z_from, hold). Period points
    /// need not lie on any sampling grid.
    #[allow(clippy::too_many_arguments)]
    fn push_periods_through(
        &mut self,
        prop: &Propagator,
        t_from: f64,
        z_from: &[f64],
        hold: &[f64],
        t_to: f64,
        stride: f64,
        next_period: &mut u32,
        max_periods: u32,
    ) -> Result<()> {
        while *next_period <= max_periods {
            let t_p = *next_period as f64 * stride;
            if t_p > t_to + tie(t_to) {
                break;
            }
            let dt = (t_p - t_from).max(0.0);
            let (e, ph) = prop.pair(dt)?;
            let a = e.mul_vec(z_from);
            let b = ph.mul_vec(hold);
            let z_p: Vector = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            self.period_norms.push(norm2(&self.to_x(&z_p)));
            *next_period += 1;
        }
        Ok(())
    }
}

pub fn run_jammed(
    sys: &LtiSystem,
    g: &GainLambda,
    schedule: &TriggerSchedule,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    run_jammed_with_cap(sys, g, schedule, cfg, EXPLICIT_SCHEDULE_MAX)
}

pub(crate) fn run_jammed_with_cap(
    sys: &LtiSystem,
    g: &GainLambda,
    schedule: &TriggerSchedule,
    cfg: &SimConfig,
    explicit_cap: u64,
) -> Result<SimTrace> {
    let n = sys.n();
    if cfg.x0.len() != n {
        return Err(Error::InvalidInput(format!(
            "x0 has {} entries for an n = {n} plant",
            cfg.x0.len()
        )));
    }
    if !(cfg.output_dt > 0.0 && cfg.output_dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("output_dt = {}", cfg.output_dt)));
    }
    if cfg.n_periods != schedule.n_periods() {
        return Err(Error::InvalidParameter(format!(
            "config asks for {} periods but the schedule covers {}",
            cfg.n_periods,
            schedule.n_periods()
        )));
    }

    let canon = sys.to_canonical()?;
    let bk = bk_matrix(&canon, g);
    let mut prop = Propagator::new(&canon.ac, &bk);
    let z0 = solve::solve(&canon.p, &cfg.x0)?;
    let jammer = JammerProfile::new(schedule.period(), schedule.t_off_cr())?;

    let mut st = RunState {
        p: &canon.p,
        u_row: &g.u_row,
        jammer,
        dt_out: cfg.output_dt,
        next_out: 1,
        samples: Vec::new(),
        period_norms: Vec::new(),
        event_times: Vec::new(),
        diverged: None,
    };

    // t1 = 0 convention: the control starts on the initial state.
    let x0 = st.to_x(&z0);
    if st.guard(0.0, &x0) {
        st.emit(0.0, x0, &z0, true);
        if schedule.len() <= explicit_cap {
            run_jammed_explicit(schedule, &mut prop, &mut st, z0)?;
        } else {
            run_jammed_powers(schedule, &mut prop, &mut st, z0)?;
        }
    }

    let outcome = match st.diverged {
        Some(t) => SimOutcome::Diverged { t },
        None => SimOutcome::Completed,
    };
    Ok(SimTrace {
        samples: st.samples,
        period_norms: st.period_norms,
        event_times: st.event_times,
        total_events: schedule.len(),
        outcome,
    })
}

fn run_jammed_explicit(
    schedule: &TriggerSchedule,
    prop: &mut Propagator,
    st: &mut RunState<'_>,
    z0: Vector,
) -> Result<()> {
    let mut z = z0;
    let mut t_seg = 0.0;
    for ev in schedule.iter() {
        st.emit_outputs_in(prop, t_seg, &z, ev.t)?;
        if st.diverged.is_some() {
            return Ok(());
        }
        z = prop.prop(ev.t - t_seg)?.mul_vec(&z);
        t_seg = ev.t;
        let Some(norm) = st.emit_trigger(ev.t, &z) else {
            return Ok(());
        };
        if let TriggerKind::PeriodEnd(_) = ev.kind {
            st.period_norms.push(norm);
        }
    }
    Ok(())
}

fn run_jammed_powers(
    schedule: &TriggerSchedule,
    prop: &mut Propagator,
    st: &mut RunState<'_>,
    z0: Vector,
) -> Result<()> {
    let tau = schedule.tau();
    let period = schedule.period();
    let s_tau = prop.prop(tau)?;
    let mut powers = PowerCache::new(s_tau);

    let mut z = z0; // state at the current period start
    for p in 1..=schedule.n_periods() {
        let pstart = (p - 1) as f64 * period;
        let pend = p as f64 * period;
        let z_at_pend = match schedule.multiples(p) {
            None => {
                st.emit_outputs_in(prop, pstart, &z, pend)?;
                if st.diverged.is_some() {
                    return Ok(());
                }
                prop.prop(pend - pstart)?.mul_vec(&z)
            }
            Some((lo, hi)) => {
                let t_lo = lo as f64 * tau;
                let t_hi = hi as f64 * tau;
                st.emit_outputs_in(prop, pstart, &z, t_lo)?;
                if st.diverged.is_some() {
                    return Ok(());
                }
                let z_lo = prop.prop(t_lo - pstart)?.mul_vec(&z);
                if st.emit_trigger(t_lo, &z_lo).is_none() {
                    return Ok(());
                }
                // Uniform stretch: gaps are exactly tau in the model, so
                // the state at multiple l is S_tau^(l - lo) z_lo.
                loop {
                    let t_out = st.next_out as f64 * st.dt_out;
                    if t_out >= t_hi - tie(t_hi) {
                        break;
                    }
                    if t_out > t_lo + tie(t_lo) {
                        let steps = (((t_out - t_lo) / tau).floor() as u64).min(hi - lo);
                        let z_l = powers.apply(&z_lo, steps);
                        let t_l = t_lo + steps as f64 * tau;
                        let zt = prop.prop((t_out - t_l).max(0.0))?.mul_vec(&z_l);
                        let xt = st.to_x(&zt);
                        if !st.guard(t_out, &xt) {
                            return Ok(());
                        }
                        st.emit(t_out, xt, &z_l, false);
                    }
                    st.next_out += 1;
                }
                let z_hi = powers.apply(&z_lo, hi - lo);
                if hi > lo && st.emit_trigger(t_hi, &z_hi).is_none() {
                    return Ok(());
                }
                st.emit_outputs_in(prop, t_hi, &z_hi, pend)?;
                if st.diverged.is_some() {
                    return Ok(());
                }
                prop.prop(pend - t_hi)?.mul_vec(&z_hi)
            }
        };
        z = z_at_pend;
        let Some(norm) = st.emit_trigger(pend, &z) else {
            return Ok(());
        };
        st.period_norms.push(norm);
    }
    Ok(())
}

pub fn run_event_triggered(
    sys: &LtiSystem,
    g: &GainLambda,
    jd: &JordanData,
    thr: &TriggerThreshold,
    cfg: &SimConfig,
    horizon: f64,
) -> Result<SimTrace> {
    let n = sys.n();
    if cfg.x0.len() != n {
        return Err(Error::InvalidInput(format!(
            "x0 has {} entries for an n = {n} plant",
            cfg.x0.len()
        )));
    }
    if !(cfg.output_dt > 0.0 && cfg.output_dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("output_dt = {}", cfg.output_dt)));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon = {horizon}")));
    }
    if cfg.n_periods == 0 {
        return Err(Error::InvalidParameter("n_periods must be at least 1".into()));
    }

    let canon = sys.to_canonical()?;
    let bk = bk_matrix(&canon, g);
    let prop = Propagator::new(&canon.ac, &bk);
    let z0 = solve::solve(&canon.p, &cfg.x0)?;

    let h_mon = cfg.output_dt / MONITOR_SUBDIV;
    let (ea, phi) = prop.pair(h_mon)?;
    let tinv = &jd.t_lambda_inv;
    let f2 = thr.f * thr.f;
    let fired = |z: &[f64], zk: &[f64]| -> bool {
        let d: Vector = zk.iter().zip(z).map(|(a, b)| a - b).collect();
        let e = tinv.mul_vec(&d);
        let xl = tinv.mul_vec(z);
        dot(&e, &e) > f2 * dot(&xl, &xl)
    };
    let advance = |z: &[f64], zk: &[f64], ea: &Matrix, phi: &Matrix| -> Vector {
        let a = ea.mul_vec(z);
        let b = phi.mul_vec(zk);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };

    // Event mode has no jammer; the channel is always available. The
    // profile below only labels samples.
    let period_stride = horizon / cfg.n_periods as f64;
    let mut st = RunState {
        p: &canon.p,
        u_row: &g.u_row,
        jammer: JammerProfile::new(horizon * 2.0, horizon * 1.5)?,
        dt_out: cfg.output_dt,
        next_out: 1,
        samples: Vec::new(),
        period_norms: Vec::new(),
        event_times: Vec::new(),
        diverged: None,
    };

    let mut z = z0.clone();
    let mut zk = z0.clone();
    let mut t_last_trig = 0.0;
    let mut next_period = 1u32;
    // t = t_base + i * h_mon; realigned after each trigger so the monitor
    // grid (and with it the output grid) stays exact.
    let mut t_base = 0.0;
    let mut i: u64 = 0;

    let x0 = st.to_x(&z0);
    if st.guard(0.0, &x0) {
        st.emit(0.0, x0, &z0, true);
        'run: loop {
            let t = t_base + i as f64 * h_mon;
            if t >= horizon - tie(horizon) {
                break;
            }
            let dt_step = h_mon.min(horizon - t);
            let partial = dt_step < h_mon;
            let z_next = if partial {
                let (e, ph) = prop.pair(dt_step)?;
                advance(&z, &zk, &e, &ph)
            } else {
                advance(&z, &zk, &ea, &phi)
            };
            let t_next = t + dt_step;
            if !z_next.iter().all(|v| v.is_finite()) {
                st.diverged = Some(t_next);
                break;
            }

            if fired(&z_next, &zk) {
                // First crossing inside (t, t_next]: bisect on the segment
                // propagator; the left end provably has no fire.
                let mut lo = 0.0f64;
                let mut hi = dt_step;
                while hi - lo > policy::EVENT_BISECT_TIME_ABS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let (em, pm) = prop.pair(mid)?;
                    if fired(&advance(&z, &zk, &em, &pm), &zk) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let (eh, ph) = prop.pair(hi)?;
                let z_trig = advance(&z, &zk, &eh, &ph);
                let t_trig = t + hi;
                let gap = t_trig - t_last_trig;
                if gap < h_mon - tie(t_trig) {
                    return Err(Error::MonitorResolution { step: h_mon });
                }
                st.push_periods_through(
                    &prop,
                    t,
                    &z,
                    &zk,
                    t_trig,
                    period_stride,
                    &mut next_period,
                    cfg.n_periods,
                )?;
                if st.emit_trigger(t_trig, &z_trig).is_none() {
                    break;
                }
                zk = z_trig.clone();
                z = z_trig;
                t_last_trig = t_trig;

                // Realign to the monitor grid with one partial step. Period
                // instants the realign jumps over are covered from the fresh
                // hold first.
                let m = (t_trig / h_mon).floor() + 1.0;
                let t_aligned = m * h_mon;
                let dt_align = t_aligned - t_trig;
                st.push_periods_through(
                    &prop,
                    t_trig,
                    &z,
                    &zk,
                    t_aligned.min(horizon),
                    period_stride,
                    &mut next_period,
                    cfg.n_periods,
                )?;
                if dt_align > tie(t_trig) && t_aligned < horizon {
                    let (e, ph2) = prop.pair(dt_align)?;
                    z = advance(&z, &zk, &e, &ph2);
                    if fired(&z, &zk) {
                        // A second crossing within one monitor step.
                        return Err(Error::MonitorResolution { step: h_mon });
                    }
                    let t_out = st.next_out as f64 * st.dt_out;
                    if (t_aligned - t_out).abs() <= tie(t_aligned) {
                        let x = st.to_x(&z);
                        if !st.guard(t_out, &x) {
                            break 'run;
                        }
                        st.emit(t_out, x, &zk, false);
                        st.next_out += 1;
                    }
                }
                t_base = t_aligned;
                i = 0;
                continue 'run;
            }

            let t_now = if partial { horizon } else { t_next };
            st.push_periods_through(
                &prop,
                t,
                &z,
                &zk,
                t_now,
                period_stride,
                &mut next_period,
                cfg.n_periods,
            )?;
            z = z_next;
            i += 1;
            if partial {
                t_base = horizon;
                i = 0;
            }

            let t_out = st.next_out as f64 * st.dt_out;
            if (t_now - t_out).abs() <= tie(t_now) {
                let x = st.to_x(&z);
                if !st.guard(t_out, &x) {
                    break;
                }
                st.emit(t_out, x, &zk, false);
                st.next_out += 1;
            }
        }
    }

    let total = st.event_times.len() as u64;
    let outcome = match st.diverged {
        Some(t) => SimOutcome::Diverged { t },
        None => SimOutcome::Completed,
    };
    Ok(SimTrace {
        samples: st.samples,
        period_norms: st.period_norms,
        event_times: st.event_times,
        total_events: total,
        outcome,
    })
}

pub fn decay_metrics(trace: &SimTrace, period: f64) -> Result<DecayMetrics> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(format!("period = {period}")));
    }
    if trace.period_norms.len() < 2 {
        return Err(Error::Span { got: trace.period_norms.len(), need: 2 });
    }
    let first = trace
        .samples
        .first()
        .ok_or(Error::Span { got: 0, need: 2 })?;
    let mut norms = vec![norm2(&first.x)];
    norms.extend_from_slice(&trace.period_norms);
    let ratios: Vec<Option<f64>> = norms
        .windows(2)
        .map(|w| (w[0] > 0.0).then(|| w[1] / w[0]))
        .collect();
    let contracting = ratios.iter().all(|r| r.map_or(true, |v| v < 1.0));
    Ok(DecayMetrics { norms, ratios, contracting })
}
