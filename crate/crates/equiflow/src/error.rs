use crate::geometry::Symmetry;

/// Errors surfaced by curve construction, flow stepping and diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate spacing at node {node}: segment length {length:e} below {limit:e}")]
    DegenerateSpacing {
        node: usize,
        length: f64,
        limit: f64,
    },

    #[error("antipodal symmetry contract broken at node {node}: {detail}")]
    SymmetryBroken { node: usize, detail: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{op} requires a closed curve, got {symmetry:?}")]
    OpenCurve {
        op: &'static str,
        symmetry: Symmetry,
    },

    #[error("area series is not decreasing")]
    NonDecreasingArea,

    #[error("node counts differ: {a} vs {b}")]
    MismatchedNodes { a: usize, b: usize },

    #[error("window too small: {0}")]
    EmptyWindow(String),

    #[error("curve rejected: {0}")]
    RejectedCurve(String),

    #[error("time step failed at t={time}: {detail}")]
    StepFailure { time: f64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
