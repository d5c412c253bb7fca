use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0} (supported: 1, 2)")]
    UnsupportedDimension(usize),

    #[error("points per axis must be a power of two >= 16, got {0}")]
    BadResolution(usize),

    #[error("half width must be positive and finite, got {0}")]
    BadHalfWidth(f64),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    BadAxis { axis: usize, dim: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("field has {got} samples, grid expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("Sobolev exponent must be >= 0, got {0}")]
    NegativeSobolev(f64),

    #[error("Sobolev exponent must be a non-negative integer for restricted norms, got {0}")]
    NonIntegerSobolev(f64),

    #[error("grid does not resolve Hermite degree {degree}: {reason}")]
    Unresolvable { degree: usize, reason: String },

    #[error("empty region")]
    EmptyRegion,

    #[error("nothing to decompose: element is at level 0")]
    LevelZero,

    #[error("invalid synthesis parameters: {0}")]
    BadSynthesisParams(String),

    #[error("compiled schedule lasts {total} >= time budget {budget}")]
    BudgetExceeded { total: f64, budget: f64 },

    #[error("invalid solver parameters: {0}")]
    BadSolverParams(String),

    #[error("invalid control segment: {0}")]
    BadSegment(String),

    #[error("blow-up in segment {segment} at t = {time}: sup|psi| = {sup}")]
    BlowUp { segment: usize, time: f64, sup: f64 },

    #[error(
        "segment {segment} imprints momentum {momentum:.3e} beyond the grid cutoff {cutoff:.3e}"
    )]
    ControlUnresolved { segment: usize, momentum: f64, cutoff: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
