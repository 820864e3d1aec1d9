use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),

    #[error("invalid polarization: {0}")]
    InvalidPolarization(String),

    #[error("quadrature precision: {0}")]
    Precision(String),

    #[error("sampled envelopes live on incompatible grids")]
    GridMismatch,

    #[error("polynomial grew to {terms} terms, above the cap of {cap}")]
    Capacity { terms: usize, cap: usize },

    #[error("polynomial contains annihilation operators and is not a ket")]
    NotAKet,

    #[error("state has squared norm {0:e}, treated as zero")]
    ZeroNorm(f64),

    #[error("map violates the commutation relations at ({i}, {j}) by {deviation:e}")]
    CcrViolation { i: usize, j: usize, deviation: f64 },

    #[error("{0}")]
    Validation(String),

    #[error("outcome has probability {0:e}, no post-measurement state exists")]
    ZeroProbability(f64),

    #[error("filter blocks every mode on the path; nothing is transmitted")]
    FullyBlocked,

    #[error("state carries {photons} photons but the Fock truncation is {n_max}")]
    Truncation { photons: usize, n_max: usize },

    #[error("coincidence routes disagree: operator {operator:e}, post-selection {postselected:e}")]
    RouteMismatch { operator: f64, postselected: f64 },
}
