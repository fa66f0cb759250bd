use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports. Vertex indices carried by variants are
/// 0-based; the I/O layer converts them for display.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("block is numerically singular (condition number {condition:e})")]
    SingularBlock { condition: f64 },

    #[error("entry ({i}, {j}) = {value:e} is nonzero but {{i, j}} is not an edge")]
    PatternViolation { i: usize, j: usize, value: f64 },

    #[error("graph is not chordal (induced cycle {cycle:?})")]
    NotChordal { cycle: Vec<usize> },

    #[error("more than {limit} maximal cliques")]
    TooManyCliques { limit: usize },

    #[error("complex has more than {limit} faces")]
    TooManyFaces { limit: usize },

    #[error("parameter vectors are defined on different complexes")]
    ComplexMismatch,

    #[error("matrix is not in the image (slack {slack:e})")]
    NotMember { slack: f64 },

    #[error("matrix is singular; fiber solving requires a positive definite input")]
    Degenerate,

    #[error("diagonal entry {vertex} is {value:e}, too small to pivot on")]
    ZeroDiagonal { vertex: usize, value: f64 },

    #[error("singleton parameter of vertex {vertex} is zero")]
    ZeroDiagonalParam { vertex: usize },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("no exact membership test for this structure: {0}")]
    Undecidable(String),
}

impl Error {
    /// Stable machine-readable code used in CLI error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotPsd { .. } => "NotPsd",
            Error::SingularBlock { .. } => "SingularBlock",
            Error::PatternViolation { .. } => "PatternViolation",
            Error::NotChordal { .. } => "NotChordal",
            Error::TooManyCliques { .. } => "TooManyCliques",
            Error::TooManyFaces { .. } => "TooManyFaces",
            Error::ComplexMismatch => "ComplexMismatch",
            Error::NotMember { .. } => "NotMember",
            Error::Degenerate => "Degenerate",
            Error::ZeroDiagonal { .. } => "ZeroDiagonal",
            Error::ZeroDiagonalParam { .. } => "ZeroDiagonalParam",
            Error::Inconsistent(_) => "Inconsistent",
            Error::Undecidable(_) => "Undecidable",
        }
    }
}
