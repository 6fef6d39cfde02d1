use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error classes used by the CLI for exit codes and by the
/// service for status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Caller supplied something malformed or illegal.
    Validation,
    /// A compiler, model or file does not exist.
    NotFound,
    /// The requested compiler cannot serve the request (size out of range, ...).
    NotApplicable,
    /// Input files could not be parsed.
    Malformed,
    /// Something went wrong inside the library.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),

    #[error("compiler {compiler} is not applicable: {reason}")]
    NotApplicable { compiler: String, reason: String },

    #[error("empty search space: {0}")]
    EmptySearchSpace(String),

    #[error("illegal parametrization: {0}")]
    IllegalParametrization(String),

    #[error("element {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("coefficient set belongs to {found}, not {expected}")]
    CoefficientMismatch { expected: String, found: String },

    #[error("size exclusions left no feasible parametrization after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("non-finite gradient at epoch {epoch}")]
    NonFiniteGradient { epoch: usize },

    #[error("model {compiler_id}@{version} not found")]
    ModelNotFound { compiler_id: String, version: String },

    #[error("unknown compiler {0}")]
    UnknownCompiler(String),

    #[error("model file has format version {found}, this build reads {expected}; migrate the file first")]
    FormatMigration { found: u32, expected: u32 },

    #[error("model {0} is frozen")]
    Frozen(String),

    #[error("fold {fold} holds {size} observations, fewer than the mini-batch size {minibatch}")]
    FoldSize {
        fold: usize,
        size: usize,
        minibatch: usize,
    },

    #[error("invalid field `{field}`: {message}")]
    InvalidField { field: String, message: String },

    #[error("test not applicable: {0}")]
    TestInapplicable(String),

    #[error("invalid compiler spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub fn at(index: usize, source: Error) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(source),
        }
    }

    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        use ErrorCategory::*;
        match self {
            Error::AtIndex { source, .. } => source.category(),
            Error::Structure(_)
            | Error::IllegalParametrization(_)
            | Error::InvalidField { .. }
            | Error::CoefficientMismatch { .. }
            | Error::FoldSize { .. }
            | Error::UndefinedMetric(_)
            | Error::TestInapplicable(_)
            | Error::Shape(_)
            | Error::Empty(_)
            | Error::SamplingExhausted { .. }
            | Error::Frozen(_) => Validation,
            Error::ModelNotFound { .. } | Error::UnknownCompiler(_) => NotFound,
            Error::NotApplicable { .. } | Error::EmptySearchSpace(_) => NotApplicable,
            Error::InvalidSpec(_)
            | Error::FormatMigration { .. }
            | Error::Malformed(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Toml(_) => Malformed,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => NotFound,
            Error::NonFiniteGradient { .. } | Error::Io(_) => Internal,
        }
    }
}
