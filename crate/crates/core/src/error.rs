use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("kernel denominator {magnitude:e} below the pole-freeness bound")]
    NearPole { magnitude: f64 },

    #[error("phase refinement stalled at lambda_I = {lambda_i}: a zero lies on or next to the contour")]
    ContourZero { lambda_i: f64 },

    #[error("winding count {raw} is not within tolerance of an integer")]
    NonIntegerWinding { raw: f64 },

    #[error("no threshold crossing for theta in [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("Newton iteration did not converge: theta = {theta}, lambda = {lambda}, residual = {residual:e}")]
    NoConvergence { theta: f64, lambda: f64, residual: f64 },

    #[error("simulation diverged at t = {t} (max |u| = {max_u})")]
    Diverged { t: f64, max_u: f64 },

    #[error("front tracking lost lock at t = {t} (jump {jump})")]
    LostLock { t: f64, jump: f64 },

    #[error("not enough samples: need {needed}, have {have}")]
    TooFewSamples { needed: usize, have: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
