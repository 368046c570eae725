use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("expected a bipartite space, found {0} modes")]
    NotBipartite(usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("coherent state tail mass {tail:.3e} exceeds tolerance {tol:.1e}; raise the cutoff")]
    TruncationTail { tail: f64, tol: f64 },

    #[error("state is null: {0}")]
    NullState(String),

    #[error("heralding probability {0:.3e} is below the floor")]
    NullHerald(f64),

    #[error("POVM completeness deficit {0:.3e} exceeds tolerance")]
    Incomplete(f64),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
