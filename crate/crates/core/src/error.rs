use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("radial quadrature did not converge within {budget} subdivisions (error estimate {error:e})")]
    QuadratureFailure { budget: usize, error: f64 },

    #[error("potential has a zero Mayer integral, no displacement law exists")]
    DegeneratePotential,

    #[error("chain length k must be at least 1")]
    InvalidK,

    #[error("potential kind `{kind}` requires the {expected} norm")]
    KindNormMismatch {
        kind: &'static str,
        expected: &'static str,
    },

    #[error("no estimates supplied")]
    EmptyInput,

    #[error("estimates come from different potentials or spaces (C_phi {0} vs {1})")]
    ProvenanceMismatch(f64, f64),

    #[error("expected sign change of f_alpha on {interval} is absent (alpha = {alpha})")]
    BracketFailure { alpha: f64, interval: &'static str },

    #[error("acceptance rate {rate:e} after {proposals} proposals; lambda * volume is too large for rejection sampling")]
    AcceptanceTooLow { rate: f64, proposals: u64 },

    #[error("batch has no accepted configurations")]
    ZeroAcceptance,

    #[error("batch is empty")]
    EmptyBatch,

    #[error("tilt weights have vanishing mean ({mass:e})")]
    DegenerateWeights { mass: f64 },

    #[error("failed to read radial table: {0}")]
    Table(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
