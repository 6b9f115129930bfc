use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric (max asymmetry {max_asym:e} exceeds {tol:e})")]
    NotSymmetric { max_asym: f64, tol: f64 },

    #[error("matrix is not orthogonal (max |O^T O - I| = {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("operator dimension {dim} does not match product of local dimensions {product}")]
    LocalDimsMismatch { dim: usize, product: usize },

    #[error("chain needs at least 3 sites, got {0}")]
    ChainTooShort(usize),

    #[error("{0} qubits exceeds the dense construction limit of {1}")]
    DenseLimitExceeded(usize, usize),

    #[error("self-loop ({0},{0}) is not a valid interaction edge")]
    SelfLoop(usize),

    #[error("Pauli Y alone has imaginary entries; combine it into a real product such as Y_i Y_j")]
    ImaginaryOperator,

    #[error("coupling constants must be non-negative, got {0}")]
    NegativeCoupling(f64),

    #[error("input is stoquastic: the non-stoquastic part vanishes and the family is undefined")]
    StoquasticInput,

    #[error("XZ degree {deg} exceeds the exact-evaluation cap {cap}; route this vertex to the sampling estimator")]
    DegreeCapExceeded { deg: usize, cap: usize },

    #[error("trace of |T|^m is degenerate ({0:e}); the average sign is undefined here")]
    DegenerateDenominator(f64),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("{qubits} qubits exceeds the Clifford-orbit enumeration cap of {cap}")]
    OrbitCapExceeded { qubits: usize, cap: usize },

    #[error("objective is not differentiable: {0}")]
    NonDifferentiable(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
