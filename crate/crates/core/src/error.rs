use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("no convergence for zero j_({m},{k}) after {iterations} iterations")]
    NoConvergence { m: u32, k: u32, iterations: usize },

    #[error("matrix is not Hermitian: |A[{row},{col}] - conj(A[{col},{row}])| = {defect:e}")]
    NotHermitian { row: usize, col: usize, defect: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("point {x},{y} is not on the boundary circle")]
    NotOnBoundary { x: f64, y: f64 },

    #[error("degenerate torus: |J| = {j} >= E = {e}")]
    DegenerateTorus { e: f64, j: f64 },

    #[error("reflection angle {p}/{q}·π is not admissible: {reason}")]
    BadAngle { p: i64, q: i64, reason: &'static str },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("mode (m={m}, k={k}) is outside the Galerkin basis")]
    SupportEscapesBasis { m: i32, k: u32 },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("not enough family members: need at least {need}, have {have}")]
    FamilyTooShort { need: usize, have: usize },

    #[error("lambda grid exceeds the truncation guard: max lambda {lambda_max} > {guard}")]
    GuardExceeded { lambda_max: f64, guard: f64 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
