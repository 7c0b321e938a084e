use thiserror::Error;

/// Errors raised by the profile, threshold, solver and diagnostics layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid profile parameters: {0}")]
    Profile(String),

    #[error("density profile is not positive: min rho_bar = {min:.6e} at x3 = {at:.6}")]
    NonPositiveDensity { min: f64, at: f64 },

    #[error(
        "stabilizing condition violated (rho_bar' must be positive on [0, h]): \
         min rho_bar' = {min:.6e} at x3 = {at:.6}"
    )]
    StabilizingCondition { min: f64, at: f64 },

    #[error("unbounded threshold (stabilizing condition violated): {0}")]
    UnboundedThreshold(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero denominator in Rayleigh quotient")]
    ZeroDenominator,

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("vacuum reached: min density {min:.6e} at t = {t:.6}")]
    Vacuum { min: f64, t: f64 },

    #[error("blow-up detected at t = {t:.6}: {what}")]
    BlowUp { t: f64, what: String },

    #[error("implicit solve failed for horizontal mode {mode}: {reason}")]
    ImplicitSolve { mode: usize, reason: String },

    #[error("fit: {0}")]
    Fit(String),

    #[error("bracket invalid: rates at kappa_lo = {lo:.6e} ({rate_lo:+.4e}) and kappa_hi = {hi:.6e} ({rate_hi:+.4e}) do not change sign")]
    Bracket {
        lo: f64,
        hi: f64,
        rate_lo: f64,
        rate_hi: f64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
