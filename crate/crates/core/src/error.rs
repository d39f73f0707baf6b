use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate simplex: {0}")]
    Degenerate(String),

    #[error("duplicate tetrahedron {0:?}")]
    DuplicateTet([usize; 4]),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),

    #[error("operator is not symmetric: {0}")]
    NotSymmetric(String),

    #[error("right-hand side is not in the image: relative residual {0:.3e}")]
    NotInImage(f64),

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("size cap exceeded: {size} > {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
