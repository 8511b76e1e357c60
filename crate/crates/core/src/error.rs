use thiserror::Error;

/// Errors raised by state, sampler, encoder and typicality operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("local dimension must be at least 2 (got {0})")]
    LocalDimension(usize),

    #[error("qudit count must be at least 1")]
    NoQudits,

    #[error("state dimension {dim} exceeds the configured cap of {cap}")]
    CapExceeded { dim: u128, cap: usize },

    #[error("digit {digit} at qudit {qudit} is out of range for local dimension {d}")]
    DigitOutOfRange { qudit: usize, digit: usize, d: usize },

    #[error("expected {expected} digits, got {got}")]
    DigitCount { expected: usize, got: usize },

    #[error("port {port} is outside 1..={n_qudits}")]
    InvalidPort { port: usize, n_qudits: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("generator is not traceless (trace {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("basis columns are not orthonormal (max deviation {deviation:.3e})")]
    NotIsometric { deviation: f64 },

    #[error("matrix is not orthogonal (max deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("subsystem selection is empty")]
    EmptySubsystem,

    #[error("port {0} listed twice in subsystem selection")]
    DuplicatePort(usize),

    #[error("operation needs at least {needed} qudits, state has {got}")]
    TooFewQudits { needed: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("generator spectrum is degenerate (eigenvalues {0:?})")]
    DegenerateSpectrum(Vec<f64>),

    #[error("node matrix is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("scramblers {first} and {second} share stream index {stream}")]
    StreamCollision { first: usize, second: usize, stream: u64 },

    #[error("energy shell [{lower}, {upper}] contains no eigenstates")]
    EmptyShell { lower: f64, upper: f64 },

    #[error("basis state {index} lies outside the energy shell")]
    OutsideShell { index: usize },

    #[error("cannot estimate inverse temperature at E = {energy}: {reason}")]
    UnstableBeta { energy: f64, reason: String },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
