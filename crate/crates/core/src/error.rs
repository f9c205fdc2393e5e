use thiserror::Error;

/// Errors produced by the toolkit, classified so the CLI can map them to
/// distinct exit codes (validation vs. Dirichlet-guard refusal vs. numerical
/// failure).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// lambda is within the guard distance of an edge Dirichlet eigenvalue,
    /// so 1/s(lambda) is refused.
    #[error("dirichlet pole guard: |s(lambda)| = {abs_s:.3e} on edge {edge}")]
    Pole { abs_s: f64, edge: String },

    #[error("not a branch point: |a(lambda)^2 + 1| = {residual:.3e}")]
    NotBranchPoint { residual: f64 },

    #[error("connector potentials are not in the same asymmetry class: max |a1 - a2| = {deviation:.3e}")]
    ClassMismatch { deviation: f64 },

    #[error("graph shape: {0}")]
    Shape(String),

    #[error("branch continuation ambiguous at path step {step}; refine the path")]
    ContinuationAmbiguity { step: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("schema: {}", .0.join("; "))]
    Schema(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 = validation/precondition,
    /// 3 = Dirichlet guard refusal, 4 = internal numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Pole { .. } => 3,
            Error::Numeric(_) | Error::ContinuationAmbiguity { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
