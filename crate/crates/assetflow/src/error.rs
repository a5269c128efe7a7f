use thiserror::Error;

/// Errors produced by model evaluation, solvers, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// The sell-side turnover of an asset collapsed (all sellers withdrawn);
    /// the model left its valid region.
    #[error("degenerate market for asset {asset}{}", match .time { Some(t) => format!(" at t = {t}"), None => String::new() })]
    DegenerateMarket { asset: usize, time: Option<f64> },

    #[error("calibration impossible: zero baseline sell turnover for asset {asset}")]
    CalibrationImpossible { asset: usize },

    #[error("no convergence after {iters} iterations ({what})")]
    NoConvergence { what: &'static str, iters: usize },

    #[error("price iterate would cross zero and damping floor was reached")]
    NonPositivePrice,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("retained window too short: {0}")]
    TooShort(String),

    #[error("no sign change of max Re eigenvalue over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("crossing eigenvalue is real (|Im| = {im:.3e} <= tol); fold, not Hopf")]
    FoldNotHopf { im: f64 },

    #[error("oscillation amplitude never exceeds the floor on [{lo}, {hi}]")]
    NoOnset { lo: f64, hi: f64 },

    #[error("operation requires {required} mode")]
    UnsupportedMode { required: &'static str },

    #[error("invalid parameter path `{path}`: {reason}")]
    InvalidParamPath { path: String, reason: String },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("validation error at `{key}`: {constraint}")]
    Validation { key: String, constraint: String },

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn validation(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
