use thiserror::Error;

/// Errors raised anywhere in the lab.
///
/// Variants split into two families: validation errors (bad input, broken
/// preconditions) and numerical failures (non-convergence, divergence). The
/// CLI maps the former to exit code 1 and the latter to exit code 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M_ij - conj(M_ji)| = {max_deviation:.3e}")]
    NotHermitian { max_deviation: f64 },

    #[error("hermiticity violation of magnitude {magnitude:.3e}")]
    HermiticityViolation { magnitude: f64 },

    #[error("trace violation: |Tr - 1| = {magnitude:.3e}")]
    TraceViolation { magnitude: f64 },

    #[error("PSD violation: min eigenvalue is -{magnitude:.3e}")]
    PsdViolation { magnitude: f64 },

    #[error("invalid Schatten order {0} (must be >= 1)")]
    InvalidOrder(f64),

    #[error("Schatten order {0} is outside the supported cases")]
    UnsupportedOrder(String),

    #[error("matrix is numerically zero (Frobenius norm {0:.3e})")]
    ZeroMatrix(f64),

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature vector has zero norm")]
    ZeroVector,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("state is not pure (1 - Tr rho^2 = {0:.3e})")]
    NotPure(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("assumption violated (min eigenvalue < epsilon) at sample indices {indices:?}")]
    AssumptionViolation { indices: Vec<usize> },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off:.3e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::Divergence { .. } | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
