//! Run configuration: TOML with strict keys, one block per module.

use crate::analysis::AnalysisOptions;
use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::plant::{JammerProfile, LtiSystem};
use crate::simulator::SimMode;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemBlock,
    pub jammer: JammerBlock,
    pub trigger: TriggerBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub sim: Option<SimBlock>,
    #[serde(default)]
    pub flags: FlagsBlock,
}

/// Plant matrices as flat row-major lists; `n` makes the shape explicit so a
/// truncated list cannot silently reshape the system.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerBlock {
    pub period: f64,
    pub t_off_cr: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerBlock {
    pub sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub lambda_start: f64,
    pub lambda_stop: f64,
    pub lambda_step: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub x0: Vec<f64>,
    pub periods: u32,
    pub output_dt: f64,
    pub lambda: f64,
    /// "jammed" or "event".
    pub mode: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsBlock {
    #[serde(default)]
    pub c3_half_exponent: bool,
    #[serde(default)]
    pub resync_multiples: bool,
    #[serde(default)]
    pub tau_stop_at_f: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            Error::InvalidInput(format!("config {}: {e}", path.display()))
        })
    }

    pub fn plant(&self) -> Result<LtiSystem> {
        let n = self.system.n;
        if self.system.a.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "system.a has {} entries, expected n*n = {}",
                self.system.a.len(),
                n * n
            )));
        }
        if self.system.b.len() != n {
            return Err(Error::InvalidInput(format!(
                "system.b has {} entries, expected n = {n}",
                self.system.b.len()
            )));
        }
        let a = Matrix::from_vec(n, n, self.system.a.clone());
        let b = Matrix::column(&self.system.b);
        LtiSystem::new(a, b)
    }

    pub fn jammer(&self) -> Result<JammerProfile> {
        JammerProfile::new(self.jammer.period, self.jammer.t_off_cr)
    }

    pub fn sigma(&self) -> f64 {
        self.trigger.sigma
    }

    pub fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            c3_half_exponent: self.flags.c3_half_exponent,
            tau_stop_at_f: self.flags.tau_stop_at_f,
        }
    }

    /// Lambda grid from the sweep block: start, start+step, ..., stop
    /// (inclusive up to rounding slack).
    pub fn grid(&self) -> Result<Vec<f64>> {
        let sw = self.sweep.as_ref().ok_or_else(|| {
            Error::InvalidInput("this command needs a [sweep] block".into())
        })?;
        if !(sw.lambda_step > 0.0 && sw.lambda_step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sweep.lambda_step = {} must be positive",
                sw.lambda_step
            )));
        }
        if !(sw.lambda_start.is_finite() && sw.lambda_stop >= sw.lambda_start) {
            return Err(Error::InvalidInput(format!(
                "sweep range [{}, {}] is empty",
                sw.lambda_start, sw.lambda_stop
            )));
        }
        let count = ((sw.lambda_stop - sw.lambda_start) / sw.lambda_step).round() as u64;
        if count > 1_000_000 {
            return Err(Error::InvalidInput(format!("sweep grid has {count} points")));
        }
        let slack = sw.lambda_step * 1e-9;
        let mut grid = Vec::new();
        for i in 0..=count + 1 {
            let lambda = sw.lambda_start + i as f64 * sw.lambda_step;
            if lambda > sw.lambda_stop + slack {
                break;
            }
            grid.push(lambda);
        }
        Ok(grid)
    }

    pub fn sim_block(&self) -> Result<&SimBlock> {
        self.sim.as_ref().ok_or_else(|| {
            Error::InvalidInput("the simulate command needs a [sim] block".into())
        })
    }
}

impl SimBlock {
    pub fn mode(&self) -> Result<SimMode> {
        match self.mode.as_str() {
            "jammed" => Ok(SimMode::JammedSchedule),
            "event" => Ok(SimMode::EventTriggered),
            other => Err(Error::InvalidInput(format!(
                "sim.mode = {other:?}, expected \"jammed\" or \"event\""
            ))),
        }
    }
}
