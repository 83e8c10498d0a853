use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("mismatched operands: {0}")]
    Mismatch(String),

    #[error("gauge violation: {0}")]
    GaugeViolation(String),

    #[error("unsupported species for this operation: {0}")]
    UnsupportedSpecies(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("conditional density undefined at time row {row}: g0 = {g0:e}")]
    UndefinedConditional { row: usize, g0: f64 },

    #[error("boosted momentum leaves the target cutoff: {0}")]
    CutoffOverflow(String),

    #[error("density has no support")]
    NoSupport,

    #[error("histogram holds no data")]
    NoData,

    #[error("energy convention requires +/- paired modes: {0}")]
    UnpairedModes(String),

    #[error("region is not aligned with the cell grid: {0}")]
    RegionMisaligned(String),

    #[error("basis too large: {states} states exceed limit {limit}")]
    BasisTooLarge { states: usize, limit: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI error documents.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Range(_) => "range",
            Error::Mismatch(_) => "mismatch",
            Error::GaugeViolation(_) => "gauge-violation",
            Error::UnsupportedSpecies(_) => "unsupported-species",
            Error::UnsupportedConfiguration(_) => "unsupported-configuration",
            Error::UndefinedConditional { .. } => "undefined-conditional",
            Error::CutoffOverflow(_) => "cutoff-overflow",
            Error::NoSupport => "no-support",
            Error::NoData => "no-data",
            Error::UnpairedModes(_) => "unpaired-modes",
            Error::RegionMisaligned(_) => "region-misaligned",
            Error::BasisTooLarge { .. } => "basis-too-large",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
