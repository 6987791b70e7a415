use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("orbital index {index} out of range for {num_orbitals} orbitals")]
    OrbitalOutOfRange { index: usize, num_orbitals: usize },

    #[error("orbital count {0} exceeds the 64-orbital cap")]
    TooManyOrbitals(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("many-body dimension {dim} exceeds the dense-oracle cap of {cap}")]
    DenseDimensionCap { dim: usize, cap: usize },

    #[error("search budget exhausted before convergence")]
    BudgetExhausted,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("scenario statement {index} failed: {message}")]
    Execution { index: usize, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
