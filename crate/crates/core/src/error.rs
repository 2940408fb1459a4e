use thiserror::Error;

/// Errors raised anywhere in the moment kernel, simulator, estimators or studies.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// The evaluator is not decreasing across the bracket ends.
    #[error("monotonicity violated: f({lo}) = {f_lo} < f({hi}) = {f_hi}")]
    Monotonicity { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// The data carry no information about the edge probability.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("instance too large for exhaustive enumeration: n = {n} (max {max})")]
    Size { n: usize, max: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("replication p = {p}, rep = {rep}: {source}")]
    Cell {
        p: f64,
        rep: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
