use thiserror::Error;

/// Errors raised by the numerical primitives and the engines built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mass vector: {0}")]
    InvalidMasses(String),

    #[error("invalid angle configuration: {0}")]
    InvalidAngles(String),

    #[error("bodies {i} and {j} collide (chord {distance:e})")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent must be positive and finite, got {0}")]
    InvalidExponent(f64),

    #[error("finite-difference step {step:e} breaks the ordering at body {index}")]
    InfeasibleStep { index: usize, step: f64 },

    #[error("minimizer did not converge (gradient norm {grad_norm:e})")]
    Unconverged { grad_norm: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("indices {0:?} are not in counterclockwise order")]
    Ordering([usize; 4]),

    #[error("invalid special positions l={l}, s={s}, n={n}")]
    InvalidPositions { l: usize, s: usize, n: usize },

    #[error("sign pattern contains a zero entry")]
    ZeroSign,

    #[error("cannot parse group element {0:?}")]
    ParseElement(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
