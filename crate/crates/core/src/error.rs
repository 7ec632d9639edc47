//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// A dense materialization was requested beyond the configured qubit cap.
    #[error("dense materialization of {requested} qubits exceeds the cap of {cap}")]
    DimensionOverflow { requested: usize, cap: usize },

    /// Operand qubit counts disagree.
    #[error("qubit count mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// A gate references a qubit outside the register.
    #[error("gate targets qubit {qubit} but the register has {n} qubits")]
    BadTarget { qubit: usize, n: usize },

    /// An operator expected to be a projector is not one.
    #[error("operator is not a projector: {0}")]
    NotAProjector(String),

    /// Two boundary-condition selectors overlap, so their sum is not a projector.
    #[error("boundary selectors overlap: {0}")]
    OverlappingSelectors(String),

    /// The measurement planner met a tensor term it cannot diagonalize.
    #[error("unsupported term shape for measurement grouping: {0}")]
    UnsupportedTermShape(String),

    /// Linear solve failed because the matrix is singular (or indefinite).
    #[error("stiffness matrix is singular or not positive definite")]
    SingularMatrix,

    /// Division by a vanishing stiffness expectation.
    #[error("stiffness expectation {value:.3e} is below the safe threshold {eps:.3e}")]
    VanishingStiffness { value: f64, eps: f64 },

    /// Threshold mitigation removed every outcome.
    #[error("mitigation threshold {tau} zeroed the whole distribution")]
    EmptyDistribution { tau: f64 },

    /// Problem description violates a precondition.
    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    /// A named verification invariant failed.
    #[error("invariant `{name}` violated: {detail}")]
    InvariantViolated { name: String, detail: String },

    /// Requested remeshing layout is not available.
    #[error("unsupported remeshing layout: {0}")]
    UnsupportedLayout(String),

    /// Filesystem or serialization failure surfaced by the CLI layer.
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
