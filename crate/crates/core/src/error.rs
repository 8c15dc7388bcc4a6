use thiserror::Error;

/// Errors raised by the solver layers.
///
/// Graph invariant violations are not errors; see [`crate::graph::ValidationReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lambda = {lambda} collides with threshold {threshold} of channel {channel} (mode {mode})")]
    ThresholdCollision {
        lambda: f64,
        threshold: f64,
        channel: usize,
        mode: usize,
    },

    #[error("point {point:?} lies outside the cross-section")]
    OutOfDomain { point: Vec<f64> },

    #[error("mode index {index} out of range (available: {available})")]
    ModeOutOfRange { index: usize, available: usize },

    #[error("graph has no infinite channels")]
    NoInfiniteChannels,

    #[error("lambda = {lambda} is not above the continuous-spectrum bottom {lambda0}")]
    BelowSpectrum { lambda: f64, lambda0: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph failed validation: {0}")]
    InvalidGraph(String),

    #[error("junction at vertex {vertex} cannot be resolved: {reason}")]
    UnresolvableJunction { vertex: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("system is singular at a threshold")]
    SingularAtThreshold,

    #[error("system is near-singular (reciprocal condition {rcond:e}); lambda = {lambda} is flagged")]
    NearSingular { lambda: f64, rcond: f64 },

    #[error("interval [{lo}, {hi}] contains threshold {threshold} of channel {channel}")]
    IntervalContainsThreshold {
        lo: f64,
        hi: f64,
        threshold: f64,
        channel: usize,
    },

    #[error("threshold fit needs at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid geometry: {0}")]
    GeometryInvalid(String),

    #[error("grid budget exceeded: {nodes} nodes > {budget}")]
    GridBudgetExceeded { nodes: usize, budget: usize },

    #[error("linear solve did not converge: {0}")]
    NonConvergedSolve(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
