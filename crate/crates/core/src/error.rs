use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("exterior algebra over {0} generators exceeds the supported maximum of 16")]
    TooManyGenerators(usize),
    #[error("list lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labels must be pairwise distinct")]
    DuplicateLabel,
    #[error("label sets overlap")]
    OverlappingLabels,
    #[error("labels must be sorted ascending")]
    UnsortedLabels,
    #[error("matrix size {n} exceeds space dimension {dim}")]
    SizeExceedsDimension { n: usize, dim: usize },
    #[error("tau = {0} is a discontinuity point of the covariance")]
    Discontinuity(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dispersion vanishes on the momentum grid and no regularization is set")]
    ZeroDispersion,
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("frequency cutoff too small: tail bound {tail:e} exceeds tolerance {tolerance:e}")]
    OmegaMaxTooSmall { tail: f64, tolerance: f64 },
    #[error("claimed Gram constant {claimed} is below the measured vector norm {measured}")]
    UnverifiedGramConstant { claimed: f64, measured: f64 },
    #[error("field index {index} out of range for {size} sites")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("quadrature did not reach relative tolerance {0:e}")]
    QuadratureNonconvergence(f64),
    #[error("lattice too coarse: {0} momenta in the support of h")]
    LatticeTooCoarse(usize),
    #[error("outside the convergence domain: {0}")]
    OutOfDomain(String),
    #[error("logarithm of an element with vanishing scalar part")]
    NonInvertible,
}

pub type Result<T> = core::result::Result<T, Error>;
