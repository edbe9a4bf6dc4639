//! Error type shared by all solver modules.

use thiserror::Error;

/// Errors produced by model construction and the spectral solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A continued-fraction denominator (or 2x2 block determinant) fell
    /// below the pivot tolerance at step `index` (1-based, counted from
    /// the head of the chain). This usually means the spectral parameter
    /// sits at or numerically near an eigenvalue of the trailing
    /// sub-chain.
    #[error("continued-fraction pivot breakdown at step {index}")]
    PivotBreakdown { index: usize },

    /// The fixed-point map degenerates to a constant (no quadratic) when
    /// the off-diagonal coefficient vanishes.
    #[error("fixed-point map is degenerate: off-diagonal coefficient is zero")]
    DegenerateMap,

    /// A dense (O(N^3)) routine was asked for a matrix beyond its cap.
    #[error("dimension {dim} exceeds the dense-solver cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// Sign-change bracketing located a number of singular values
    /// different from the matrix dimension; the grid is too coarse to
    /// separate (or correctly count) the roots. Carries what was found.
    #[error("located {} singular values, expected {expected}; refine the grid", found.len())]
    GridTooCoarse { expected: usize, found: Vec<f64> },

    /// Input document is not syntactically well-formed.
    #[error("malformed input: {0}")]
    MalformedInput(String),

    /// Band lengths of a custom model are inconsistent with its dimension.
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    /// Unrecognized model variant tag.
    #[error("unknown model variant \"{0}\"")]
    UnknownVariant(String),

    /// A matrix entry or parameter is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An operation that needs a Hermitian block operator received a
    /// non-Hermitian one.
    #[error("operation requires a Hermitian block operator: {0}")]
    NotHermitian(&'static str),

    /// The dense eigensolver backend failed to converge.
    #[error("dense eigensolver failure: {0}")]
    Eigensolver(String),
}
