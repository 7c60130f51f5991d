use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("correlation generator must have unit modulus, got |t| = {modulus}")]
    NonUnitGenerator { modulus: f64 },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pilot length {tau} shorter than number of users {users}")]
    PilotTooShort { tau: usize, users: usize },

    #[error("degenerate beamformer for user {0}: expansion vector is zero")]
    DegenerateBeamformer(usize),
}
