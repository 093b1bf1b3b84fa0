use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample period: {0} h (must be > 0)")]
    InvalidPeriod(f64),

    #[error("alignment failed: {0}")]
    Alignment(String),

    #[error("split failed: {0}")]
    Split(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("normalization failed: {0}")]
    Normalization(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("height estimation failed: {0}")]
    Estimation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("series misaligned: {0}")]
    Misaligned(String),

    #[error("imputation failed: {0}")]
    Imputation(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("training diverged: {0}")]
    Training(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("forecast failed: {0}")]
    Forecast(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("model schema mismatch: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable category used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidPeriod(_) => "invalid_period",
            Error::Alignment(_) => "alignment",
            Error::Split(_) => "split",
            Error::Parse { .. } => "parse",
            Error::Normalization(_) => "normalization",
            Error::Domain(_) => "domain",
            Error::Estimation(_) => "estimation",
            Error::Parameter(_) => "parameter",
            Error::Misaligned(_) => "misaligned",
            Error::Imputation(_) => "imputation",
            Error::Fit(_) => "fit",
            Error::Training(_) => "training",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Forecast(_) => "forecast",
            Error::Config(_) => "config",
            Error::Schema(_) => "schema",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
