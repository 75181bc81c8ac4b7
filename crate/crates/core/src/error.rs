use thiserror::Error;

pub type Result<T> = std::result::Result<T, QkdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QkdError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace:.12} differs from the expected {expected}")]
    BadTrace { trace: f64, expected: f64 },

    #[error("state is not normalized (squared norm {norm_sqr:.12})")]
    NotNormalized { norm_sqr: f64 },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("channel is not trace preserving (max |sum K^dagger K - I| = {deviation:.3e})")]
    NotTracePreserving { deviation: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("parameter `{name}` = {value} is out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("average encoding output depends on the input: {0}")]
    InputDependentOutput(crate::channels::FixedOutputViolation),

    #[error("constructed POVM element {index} has eigenvalue {min_eigenvalue:.3e}")]
    InconsistentEncoding { index: usize, min_eigenvalue: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no {0} records available for error estimation")]
    EmptyEstimation(&'static str),

    #[error("rate has no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error("i/o error: {0}")]
    Io(String),
}
