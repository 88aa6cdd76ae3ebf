//! Command-line front end.
//!
//! Four subcommands share one TOML config: `canonical` prints the canonical
//! form, `analyze` sweeps lambda and reports C(lambda) with the resilience
//! threshold, `tau` tabulates the minimal inter-event time, `simulate` runs
//! the closed loop and emits trace plus decay metrics. All output is plain
//! text/CSV, deterministic byte-for-byte for a fixed config and platform.
//!
//! Exit codes: 0 success, 1 config error, 2 plant not controllable,
//! 3 numerical failure, 4 no lambda_bar on the analyzed grid.

pub mod config;

use crate::analysis::sweep;
use crate::controller::{closed_loop, jordan_chain, synthesize_gain, trigger_threshold};
use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::plant::JammerState;
use crate::simulator::{decay_metrics, run_event_triggered, run_jammed, SimConfig, SimMode, SimOutcome, SimTrace};
use crate::trigger::{build_schedule, compute_tau};
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "ctrl-dos", version, about = "Controller synthesis and simulation under periodic jamming")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the controllable canonical form of the configured plant
    Canonical(CommonArgs),
    /// Sweep lambda, report C(lambda) components and the resilience threshold
    Analyze(CommonArgs),
    /// Tabulate the minimal inter-event time over the lambda grid
    Tau(CommonArgs),
    /// Simulate the closed loop under the jammed schedule or pure event triggering
    Simulate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for grid sweeps (default: one per core)
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for output documents; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Canonical(a) => cmd_canonical(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Tau(a) => cmd_tau(a),
        Cmd::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotControllable { .. } => 2,
        Error::NumericalFailure(_)
        | Error::RankDeficiency { .. }
        | Error::MonitorResolution { .. }
        | Error::NoCrossing { .. } => 3,
        _ => 1,
    }
}

struct Doc {
    name: &'static str,
    content: String,
}

fn emit_docs(out: &Option<PathBuf>, docs: &[Doc]) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| {
                Error::InvalidInput(format!("cannot create {}: {e}", dir.display()))
            })?;
            for d in docs {
                let path = dir.join(d.name);
                std::fs::write(&path, &d.content).map_err(|e| {
                    Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
                })?;
            }
        }
        None => {
            for (i, d) in docs.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                print!("{}", d.content);
            }
        }
    }
    Ok(())
}

fn with_pool<T, F>(jobs: Option<usize>, f: F) -> Result<T>
where
    F: FnOnce() -> Result<T> + Send,
    T: Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(Error::InvalidParameter("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?
            .install(f),
    }
}

/// Computed values print as {:e} (shortest round-trip, explicit exponent);
/// grid values and counters print as {} so configured numbers appear the way
/// they were written.
fn fmt_e(v: f64) -> String {
    format!("{v:e}")
}

fn matrix_lines(m: &Matrix) -> String {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| format!("{}", m[(i, j)]))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn cmd_canonical(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let plant = cfg.plant()?;
    let canon = plant.to_canonical()?;
    let a_line = canon
        .a_coeffs
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    let content = format!(
        "n = {}\na = {}\nAc:\n{}\nBc:\n{}\nP:\n{}\n",
        canon.n(),
        a_line,
        matrix_lines(&canon.ac),
        matrix_lines(&canon.bc.transpose()),
        matrix_lines(&canon.p),
    );
    emit_docs(&args.out, &[Doc { name: "canonical.txt", content }])?;
    Ok(0)
}

fn cmd_analyze(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let plant = cfg.plant()?;
    let canon = plant.to_canonical()?;
    let jammer = cfg.jammer()?;
    let grid = cfg.grid()?;
    let opts = cfg.options();
    let sigma = cfg.sigma();

    let result = with_pool(args.jobs, || sweep(&canon, &jammer, sigma, &grid, opts))?;

    let mut csv = String::from("lambda,tau_lambda,C1,C2,C3,C\n");
    for r in &result.reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.lambda,
            fmt_e(r.tau_lambda),
            fmt_e(r.c1),
            fmt_e(r.c2),
            fmt_e(r.c3),
            fmt_e(r.c)
        ));
    }
    match result.lambda_bar {
        Some(l) => csv.push_str(&format!("# lambda_bar = {l}\n")),
        None => csv.push_str("# lambda_bar = none\n"),
    }
    emit_docs(&args.out, &[Doc { name: "analyze.csv", content: csv }])?;
    Ok(if result.lambda_bar.is_some() { 0 } else { 4 })
}

fn cmd_tau(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let plant = cfg.plant()?;
    let canon = plant.to_canonical()?;
    let grid = cfg.grid()?;
    let sigma = cfg.sigma();

    let rows = with_pool(args.jobs, || {
        use rayon::prelude::*;
        grid.par_iter()
            .map(|&lambda| {
                let g = synthesize_gain(canon.n(), lambda, &canon.a_coeffs)?;
                match compute_tau(&canon, &g, sigma) {
                    Ok(t) => Ok(format!("{lambda},{}\n", fmt_e(t.tau_lambda))),
                    // Below the admissibility bound tau is undefined; the
                    // row says so instead of killing the whole table.
                    Err(Error::InadmissibleLambda { .. }) => Ok(format!("{lambda},inadmissible\n")),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<String>>>()
    })?;

    let mut csv = String::from("lambda,tau_lambda\n");
    for row in rows {
        csv.push_str(&row);
    }
    emit_docs(&args.out, &[Doc { name: "tau.csv", content: csv }])?;
    Ok(0)
}

fn cmd_simulate(args: &CommonArgs) -> Result<i32> {
    let cfg = RunConfig::load(&args.config)?;
    let plant = cfg.plant()?;
    let canon = plant.to_canonical()?;
    let jammer = cfg.jammer()?;
    let sim = cfg.sim_block()?;
    let mode = sim.mode()?;
    let sigma = cfg.sigma();

    let g = synthesize_gain(canon.n(), sim.lambda, &canon.a_coeffs)?;
    let sim_cfg = SimConfig {
        x0: sim.x0.clone(),
        n_periods: sim.periods,
        output_dt: sim.output_dt,
        lambda: sim.lambda,
        sigma,
        mode,
    };
    let trace = match mode {
        SimMode::JammedSchedule => {
            let tau = compute_tau(&canon, &g, sigma)?;
            let schedule =
                build_schedule(&tau, &jammer, sim.periods, cfg.flags.resync_multiples)?;
            run_jammed(&plant, &g, &schedule, &sim_cfg)?
        }
        SimMode::EventTriggered => {
            let jd = jordan_chain(&closed_loop(&canon, &g), sim.lambda)?;
            let thr = trigger_threshold(&jd, &g, &canon.bc, sigma)?;
            let horizon = sim.periods as f64 * jammer.period();
            run_event_triggered(&plant, &g, &jd, &thr, &sim_cfg, horizon)?
        }
    };

    let trace_doc = Doc { name: "trace.csv", content: trace_csv(&trace, canon.n()) };
    let metrics_doc = Doc {
        name: "metrics.csv",
        content: metrics_csv(&trace, jammer.period())?,
    };
    emit_docs(&args.out, &[trace_doc, metrics_doc])?;
    Ok(0)
}

fn trace_csv(trace: &SimTrace, n: usize) -> String {
    let mut csv = String::from("t");
    for i in 1..=n {
        csv.push_str(&format!(",x{i}"));
    }
    csv.push_str(",u,jammer,trigger\n");
    for s in &trace.samples {
        csv.push_str(&fmt_e(s.t));
        for v in &s.x {
            csv.push(',');
            csv.push_str(&fmt_e(*v));
        }
        let jam = match s.jammer {
            JammerState::Sleeping => "sleeping",
            JammerState::Active => "active",
        };
        csv.push_str(&format!(",{},{},{}\n", fmt_e(s.u), jam, u8::from(s.triggered)));
    }
    csv
}

fn metrics_csv(trace: &SimTrace, period: f64) -> Result<String> {
    let mut csv = String::from("n,norm_xnT,ratio\n");
    match decay_metrics(trace, period) {
        Ok(m) => {
            for (i, norm) in m.norms.iter().enumerate() {
                let ratio = if i == 0 {
                    String::new()
                } else {
                    match m.ratios[i - 1] {
                        Some(r) => fmt_e(r),
                        None => "none".into(),
                    }
                };
                csv.push_str(&format!("{i},{},{ratio}\n", fmt_e(*norm)));
            }
            csv.push_str(&format!("# contracting = {}\n", m.contracting));
        }
        Err(Error::Span { .. }) => {
            // Too few completed periods for ratios; report the norms only.
            let first = trace.samples.first().map(|s| crate::numerics::matrix::norm2(&s.x));
            let norms: Vec<f64> = first.into_iter().chain(trace.period_norms.iter().copied()).collect();
            for (i, norm) in norms.iter().enumerate() {
                csv.push_str(&format!("{i},{},\n", fmt_e(*norm)));
            }
            csv.push_str("# ratios need at least 2 completed periods\n");
        }
        Err(e) => return Err(e),
    }
    match trace.outcome {
        SimOutcome::Completed => csv.push_str("# outcome = completed\n"),
        SimOutcome::Diverged { t } => {
            csv.push_str(&format!("# outcome = diverged at t = {}\n", fmt_e(t)))
        }
    }
    Ok(csv)
}
