use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("straight tube (kappa0 = 0) has no shape function")]
    StraightTube,

    #[error("basis index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("no basis function with m = {m}, n = {n}")]
    NoSuchFunction { m: i32, n: u32 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error(
        "overlap matrix is ill-conditioned (condition {condition:.3e}); basis function j = {index} \
         is nearly dependent on j < {index}"
    )]
    IllConditioned { condition: f64, index: usize },

    #[error("matrix is not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {limit:.3e}")]
    NotHermitian { defect: f64, limit: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver failed to converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("state index {index} out of range (spectrum has {len} states)")]
    StateOutOfRange { index: usize, len: usize },
}
