use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("total dimension {dim} exceeds the capacity cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("subsystem index {index} out of range for {parties} subsystems")]
    SubsystemIndex { index: usize, parties: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(&'static str),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("party count mismatch: {left} vs {right}")]
    PartyMismatch { left: usize, right: usize },

    #[error("stage-2 table has {entries} entries, cap is {cap}")]
    TableCapacity { entries: u128, cap: u128 },

    #[error("arithmetic overflow: {0}")]
    Overflow(&'static str),

    #[error("description decodes to the zero vector")]
    ZeroVector,

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
