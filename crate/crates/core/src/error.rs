use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("graph is disconnected: node {a} and node {b} lie in different components")]
    Disconnected { a: String, b: String },

    #[error("graph appears disconnected: Laplacian has {zero_eigenvalues} near-zero eigenvalues")]
    SpectralDisconnected { zero_eigenvalues: usize },

    #[error("graph needs at least {required} nodes, got {actual}")]
    TooFewNodes { required: usize, actual: usize },

    #[error("{what} is limited to {limit} nodes, got {actual}; {hint}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        actual: usize,
        hint: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("node {node} has an empty {hops}-hop neighborhood; increase the hop count or drop isolated nodes")]
    EmptyNeighborhood { node: String, hops: usize },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("constrained weight problem is inconsistent (discriminant {discriminant:e}): {reason}")]
    InconsistentKkt { discriminant: f64, reason: &'static str },

    #[error("non-finite coordinates at outer iteration {iteration}; check dissimilarity scaling")]
    NonFinite { iteration: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::EmptyGraph
            | Error::Disconnected { .. }
            | Error::SpectralDisconnected { .. }
            | Error::TooFewNodes { .. }
            | Error::EmptyNeighborhood { .. }
            | Error::Io { .. } => ErrorClass::Data,
            Error::TooLarge { .. }
            | Error::InvalidParameter(_)
            | Error::DimensionMismatch(_)
            | Error::Config(_) => ErrorClass::Config,
            Error::NotPositiveDefinite(_)
            | Error::InconsistentKkt { .. }
            | Error::NonFinite { .. } => ErrorClass::Numeric,
            Error::Stage { source, .. } => source.class(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class().exit_code()
    }

    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
