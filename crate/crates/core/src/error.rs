use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// Variants are grouped by class; [`Error::class`] gives the short
/// machine-readable name used by the command line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of supported range: {0}")]
    Range(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("point outside map domain: {0}")]
    Domain(String),

    #[error("coefficient evaluation failed on triangle {triangle}: {detail}")]
    Assembly { triangle: usize, detail: String },

    #[error("system is singular or near-resonant at lambda = {lambda}: {detail}")]
    Resonance { lambda: f64, detail: String },

    #[error("inconsistent discrete solution: {0}")]
    Inconsistency(String),

    #[error("eigensolver failure: {0}")]
    Solver(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> &'static str {
        match self {
            Error::Range(_) => "range",
            Error::Parameter(_) => "parameter",
            Error::Geometry(_) => "geometry",
            Error::Domain(_) => "domain",
            Error::Assembly { .. } => "assembly",
            Error::Resonance { .. } => "resonance",
            Error::Inconsistency(_) => "inconsistency",
            Error::Solver(_) => "solver",
            Error::Resolution(_) => "resolution",
            Error::Configuration(_) => "configuration",
            Error::Internal(_) => "internal",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
