use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A domain parameter or constructor argument violates a stated constraint.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A geometric inequality between neighbouring pieces fails.
    #[error("constraint `{inequality}` violated at piece {index}")]
    ConstraintViolated { inequality: String, index: usize },

    /// An index or argument lies outside the admissible range of an operation.
    #[error("{0}")]
    OutOfRange(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// The skeleton operator vanishes identically on Group 3 edges.
    #[error("operator is zero on singular edges (edge {0})")]
    SingularEdge(usize),

    #[error("geometry not representable on the grid: {what} = {value}")]
    NotRepresentable { what: String, value: f64 },

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
