use thiserror::Error;

/// Crate-wide error type. Each variant maps onto one machine-parsable
/// category used by the CLI's single-line error output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    Shape {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    #[error("{0}")]
    Contract(String),

    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{0}")]
    Ingestion(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("insufficient data ({evaluated} evaluable records, coverage {coverage:.4}): {msg}")]
    InsufficientData {
        evaluated: usize,
        coverage: f64,
        msg: String,
    },

    #[error("word not found: {0}")]
    Lookup(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Construct a shape error from two `(rows, cols)` pairs.
    pub fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Shape {
            op,
            lhs: format!("{}x{}", lhs.0, lhs.1),
            rhs: format!("{}x{}", rhs.0, rhs.1),
        }
    }

    /// Stable category label for machine-parsable CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Contract(_) => "contract",
            Error::Format { .. } => "format",
            Error::Ingestion(_) => "ingestion",
            Error::Checkpoint(_) => "checkpoint",
            Error::InsufficientData { .. } => "coverage",
            Error::Lookup(_) => "lookup",
            Error::Divergence { .. } => "divergence",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
