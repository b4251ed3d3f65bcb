//! Crate-wide error type.

/// Everything that can go wrong across the filtering backends and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("density integral is zero or not finite; the posterior is numerically dead")]
    DeadPosterior,

    #[error("density has negative values beyond tolerance (min {min:.3e}); increase n_max")]
    NegativeDensity { min: f64 },

    #[error(
        "kernel half-width {needed:.4} exceeds half the grid width {available:.4}; enlarge the grid or shrink eps"
    )]
    GridTooSmall { needed: f64, available: f64 },

    #[error("operation requires a normalized density")]
    Unnormalized,

    #[error("densities live on different grids")]
    GridMismatch,

    #[error(
        "basis cannot resolve the prior: L2 residual {residual:.3e} exceeds {limit:.1e}; increase n_max or widen the prior"
    )]
    PriorResidual { residual: f64, limit: f64 },

    #[error("coefficient tail mass {tail:.3e} exceeds {limit:.2}; increase n_max")]
    TailMass { tail: f64, limit: f64 },

    #[error("method `{method}` requires a Gaussian potential and a full observation series")]
    IncompatibleMethod { method: String },

    #[error("config: {0}")]
    Config(String),

    /// Domain violations that do not deserve their own variant (out-of-range
    /// indices, times beyond the observation series, and the like).
    #[error("{0}")]
    Domain(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
