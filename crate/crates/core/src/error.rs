use thiserror::Error;

/// Errors raised by the temporal-mode toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The grid cannot hold a mode of the requested order and width.
    #[error("support violation: {what} needs a span of at least {required:.6e} but the grid spans {available:.6e}")]
    SupportViolation {
        what: String,
        required: f64,
        available: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not normalized: norm² = {norm_sq:.12} ({context})")]
    NotNormalized { norm_sq: f64, context: String },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not unitary: residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotUnitary { residual: f64, tolerance: f64 },

    #[error("green channel occupied: {0}")]
    GreenOccupied(String),

    #[error("target mode {0} is already occupied")]
    OccupiedTarget(usize),

    #[error("repeated index {0} in cascade order")]
    RepeatedIndex(usize),

    #[error("undefined selectivity: all conversion angles are zero")]
    UndefinedSelectivity,

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("missing tomography settings: {0}")]
    MissingSettings(String),

    #[error("singular reconstruction system for index tuple {0:?}")]
    SingularSystem(Vec<usize>),

    #[error("inconsistent normalization: {0}")]
    InconsistentNormalization(String),

    #[error("zero-trace matrix cannot be renormalized")]
    ZeroTrace,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid slot: {0}")]
    InvalidSlot(String),

    #[error("Bell-pair supply exhausted after {consumed} pairs")]
    SupplyExhausted { consumed: usize },

    #[error("empty input: {0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, TmError>;
