use thiserror::Error;

/// Library-wide error type. The CLI maps variants to process exit codes:
/// parameter/input problems are user-fixable (exit 1), a failed
/// controllability test is exit 2, and numerical breakdowns are exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("rank deficiency: residual {residual:e} exceeds the solve tolerance")]
    RankDeficiency { residual: f64 },

    #[error("pair (A, B) is not controllable: controllability matrix has rank {rank} < {n}")]
    NotControllable { rank: usize, n: usize },

    #[error("lambda = {lambda} is inadmissible: the trigger analysis requires lambda > {bound}")]
    InadmissibleLambda { lambda: f64, bound: f64 },

    #[error("phi never reached the stopping level {level} within horizon {horizon} s")]
    NoCrossing { level: f64, horizon: f64 },

    #[error("tau_lambda = {tau:e} exceeds T_off_cr = {t_off_cr}; raise lambda until tau fits the sleep window")]
    LambdaTooSmall { tau: f64, t_off_cr: f64 },

    #[error("event gap fell below the monitor step {step:e}; reduce output_dt")]
    MonitorResolution { step: f64 },

    #[error("target {target} lies outside the attainable range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("trace spans {got} full period(s); at least {need} are required")]
    Span { got: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
