use thiserror::Error;

/// Errors raised by the workbench. Every public operation returns this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported Hilbert-space dimension {0} (allowed 2..=16)")]
    UnsupportedDimension(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not unitary (Frobenius deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid projective measurement: {0}")]
    InvalidMeasurement(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("unbound: {0}")]
    Unbound(String),

    #[error("invalid ontological model: {0}")]
    InvalidModel(String),

    #[error("no operational-eigenstate preparations declared for value `{0}`")]
    MissingEigenstates(String),

    #[error("atom count {0} exceeds the limit of 1000000")]
    TooManyAtoms(u128),

    #[error("invalid linear program: {0}")]
    InvalidProgram(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("row {index}: {source}")]
    Row {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
