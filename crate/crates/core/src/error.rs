//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by kernel construction, simulation, transport and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("unknown mollifier family `{0}`")]
    UnknownFamily(String),

    #[error("grid too coarse: {name} = {spacing} exceeds eps/2 = {limit}")]
    GridTooCoarse {
        name: &'static str,
        spacing: f64,
        limit: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} outside table range [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("history covers [0, {available}] but time {requested} was requested")]
    HistoryTooShort { requested: f64, available: f64 },

    #[error("non-finite state for particle {0}")]
    NonFinite(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("transport problem has {atoms} atoms, over the exact budget {budget}")]
    OverBudget { atoms: usize, budget: usize },

    #[error("entropic solver did not converge: marginal error {residual:e} after {iterations} iterations")]
    EntropicNotConverged { residual: f64, iterations: usize },

    #[error("ensemble is not normalized: weights sum to {0}")]
    NotNormalized(f64),

    #[error("field box too small: half-width {half_width} but radius {required} is required")]
    BoxTooSmall { half_width: f64, required: f64 },

    #[error("wrong kernel family: expected {expected}, got {found}")]
    WrongKernelFamily {
        expected: &'static str,
        found: &'static str,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
