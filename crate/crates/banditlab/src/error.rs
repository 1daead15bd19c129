use thiserror::Error;

/// Every failure the workbench can report. Variants are grouped by the exit
/// code the CLI maps them to: configuration problems exit with 2, numerical
/// failures with 3.
#[derive(Debug, Error)]
pub enum BanditError {
    #[error("action {index} has norm {norm} > 1")]
    NormViolation { index: usize, norm: f64 },
    #[error("action set has rank {rank}, does not span R^{d}")]
    RankDeficient { rank: usize, d: usize },
    #[error("actions {0} and {1} are identical")]
    DuplicateArm(usize, usize),
    #[error("arms {0} and {1} both attain the minimal mean loss")]
    NonUniqueOptimum(usize, usize),
    #[error("mean loss {value} of arm {index} is outside [-1, 1]")]
    MeanOutOfRange { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("vector has a component outside the range of the matrix (residual {0:e})")]
    SingularDirection(f64),
    #[error("matrix is not positive definite")]
    NotPd,
    #[error("no samples")]
    EmptySamples,
    #[error("bounds lo={lo} > hi={hi}")]
    BadBounds { lo: f64, hi: f64 },
    #[error("subset is empty")]
    EmptySubset,
    #[error("gap estimates must be finite and nonnegative")]
    NonFiniteGaps,
    #[error("program is unbounded")]
    Unbounded,
    #[error("action set is not orthonormal")]
    NonOrthonormal,
    #[error("round {t}, arm {index}: mean {value} leaves [-1, 1]")]
    AdmissibilityViolation { t: usize, index: usize, value: f64 },
    #[error("argument outside the domain: {0}")]
    DomainError(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl BanditError {
    /// Exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            BanditError::Config(_)
            | BanditError::Io(_)
            | BanditError::NormViolation { .. }
            | BanditError::RankDeficient { .. }
            | BanditError::DuplicateArm(..)
            | BanditError::NonUniqueOptimum(..)
            | BanditError::MeanOutOfRange { .. }
            | BanditError::LengthMismatch { .. }
            | BanditError::BadBounds { .. }
            | BanditError::EmptySubset
            | BanditError::EmptySamples
            | BanditError::NonOrthonormal
            | BanditError::AdmissibilityViolation { .. }
            | BanditError::DomainError(_) => 2,
            BanditError::SingularDirection(_)
            | BanditError::NotPd
            | BanditError::NonFiniteGaps
            | BanditError::Unbounded => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, BanditError>;
