use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cell count mismatch: expected {expected}, found {found}")]
    CellCount { expected: usize, found: usize },

    #[error("phase dimension mismatch: expected {expected}, found {found}")]
    PhaseDimension { expected: usize, found: usize },

    #[error("field shape mismatch: expected {expected} values, found {found}")]
    FieldShape { expected: usize, found: usize },

    #[error("non-finite value in cell {cell}: {what}")]
    NonFinite { cell: usize, what: &'static str },

    #[error("cell {cell}: negative weight {weight}")]
    NegativeWeight { cell: usize, weight: f64 },

    #[error("cell {cell}: {what} weights sum to {sum}, expected 1")]
    WeightSum { cell: usize, what: &'static str, sum: f64 },

    #[error("cell {cell}: interior cell has no phase atoms")]
    EmptyCell { cell: usize },

    #[error("cell {cell}: final-layer cell carries phase atoms")]
    AtomsInFinalLayer { cell: usize },

    #[error("cell {cell}: density {density} is at or below the vacuum floor")]
    Vacuum { cell: usize, density: f64 },

    #[error("cell {cell}: negative concentration mass {mass}")]
    NegativeMass { cell: usize, mass: f64 },

    #[error("cell {cell}: angle atoms must be present exactly when the concentration mass is positive")]
    AngleAtomsMismatch { cell: usize },

    #[error("cell {cell}: angle atom off the recession surface (residual {residual:e})")]
    OffSurface { cell: usize, residual: f64 },

    #[error("grids differ")]
    GridMismatch,

    #[error("growth structures differ: {left} vs {right}")]
    GrowthMismatch { left: String, right: String },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("cannot project the zero vector onto a recession surface")]
    ZeroVector,

    #[error("negative density coordinate {0}")]
    NegativeDensity(f64),

    #[error("test function {label} is not divergence-free (divergence {divergence:e})")]
    NotDivergenceFree { label: String, divergence: f64 },

    #[error("simplex weights invalid: {0}")]
    Simplex(String),

    #[error("candidate set is empty")]
    EmptyCandidateSet,

    #[error("brute force supports at most {max} candidates, got {found}")]
    TooManyCandidates { max: usize, found: usize },

    #[error("candidate {index} rejected: {reason}")]
    CandidateRejected { index: usize, reason: String },

    #[error("selection result {index} is not converged (gap {gap:e} > tol {tol:e})")]
    NotConverged { index: usize, gap: f64, tol: f64 },

    #[error("{position}: {message}")]
    Schema { position: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
