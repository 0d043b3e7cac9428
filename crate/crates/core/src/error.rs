use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("isometry is not hyperbolic (|trace| = {trace})")]
    NotHyperbolic { trace: f64 },

    #[error("matrix is not in SL(2,R) up to scale (det = {det})")]
    NotUnimodular { det: f64 },

    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: usize, rank: usize },

    #[error("invalid length {0}: lengths must be finite and positive")]
    InvalidLength(f64),

    #[error("invalid angle {0}: crossing angles must lie in (0, pi)")]
    InvalidAngle(f64),

    #[error("once-holed torus is not discrete: tr[w1,w2] = {trace} >= -2")]
    NotDiscrete { trace: f64 },

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("gluing mismatch along {curve}: {reason}")]
    GluingMismatch { curve: String, reason: String },

    #[error("Margulis invariants disagree along the gluing curve ({left} vs {right})")]
    MarMismatch { left: f64, right: f64 },

    #[error("linear system is singular: {0}")]
    SingularSystem(String),

    #[error("crossing angle is pi/2 (theta = {theta}); the boundary invariant is constrained by {constraint}")]
    RightAngle { theta: f64, constraint: String },

    #[error("handle {handle} has crossing angle pi/2; its invariants are constrained by {constraint}; use another generating pair")]
    RightAngleHandle { handle: usize, constraint: String },

    #[error("representation is not in the normalized torus frame: {0}")]
    NotNormalizedFrame(String),

    #[error("torus boundary [w1,w2] is not hyperbolic")]
    NonHyperbolicBoundary,

    #[error("words do not generate the once-holed torus group: {0}")]
    NotGenerating(String),

    #[error("finite-difference step {step} leaves the hyperbolic locus")]
    StepTooLarge { step: f64 },

    #[error("axis of rotation {rotation} does not cross the twist curve (|B| = {pairing})")]
    AxesDontCross { rotation: String, pairing: f64 },

    #[error("twist curves are not pairwise disjoint: {0}")]
    CurvesNotDisjoint(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown label {0}")]
    UnknownLabel(String),
}

pub type Result<T> = std::result::Result<T, Error>;
