use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("cannot normalize an all-zero image to {0} photons")]
    ZeroImage(f64),

    #[error("dark-state polariton undefined: coupling and collective coupling are both zero")]
    UndefinedPolariton,

    #[error("group velocity must be positive and finite, got {0}")]
    NonPositiveGroupVelocity(f64),

    #[error("storage efficiency undefined: leakage energy is zero")]
    ZeroLeakage,

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("tau unidentifiable: {0}")]
    TauUnidentifiable(String),

    #[error("decay fit did not converge after {iterations} iterations (cost {cost:e}, damping {damping:e})")]
    NoConvergence {
        iterations: usize,
        cost: f64,
        damping: f64,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable category, used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::ZeroImage(_) => "zero_image",
            Error::UndefinedPolariton => "undefined_polariton",
            Error::NonPositiveGroupVelocity(_) => "non_positive_group_velocity",
            Error::ZeroLeakage => "zero_leakage",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::TauUnidentifiable(_) => "tau_unidentifiable",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ConfigParse { .. } => "config_parse",
            Error::Pgm(_) => "pgm",
            Error::Io { .. } => "io",
        }
    }
}
