use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("shift ({0}, {1}) is not a lattice vector for spacing {2}")]
    NotOnLattice(f64, f64, f64),
    #[error("spectral parameter z = {z} is not below the ground level {omega}")]
    AboveGroundLevel { z: f64, omega: f64 },
    #[error("kernel evaluated at zero displacement")]
    ZeroDisplacement,
    #[error("grid too large for dense solve: n = {0}")]
    GridTooLarge(usize),
    #[error("sector projection annihilated the start block")]
    EmptySector,
    #[error("eigensolver did not converge: {0}")]
    NotConverged(String),
    #[error("bracket [{lo}, {hi}] has no sign change in S ({s_lo:e}, {s_hi:e})")]
    NoSignChange { lo: f64, hi: f64, s_lo: f64, s_hi: f64 },
    #[error("fit rejected: {0}")]
    FitRejected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
