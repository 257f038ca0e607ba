use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Degenerate,
    Usage,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("case '{case}', series '{series}': {message}")]
    HalfPair {
        case: String,
        series: String,
        message: String,
    },

    #[error("invalid dataset structure: {0}")]
    Structure(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("series '{series}' has {n} usable pairs; at least {min} are required (N < 3 makes the projection regression degenerate)")]
    InsufficientPairs {
        series: String,
        n: usize,
        min: usize,
    },

    #[error("observed values have zero variance{}", context_suffix(.0))]
    DegenerateObserved(Option<String>),

    #[error("scalar ({kind}) evaluates to zero{}", context_suffix(.series))]
    DegenerateScalar {
        kind: &'static str,
        series: Option<String>,
    },

    #[error("series has zero variance or zero sum of squares: {0}")]
    DegenerateSeries(String),

    #[error("series {i} and {j} share only {overlap} cases; at least 3 are needed for R² (set case_match to false for this pair or use the surrogate policy)")]
    InsufficientOverlap { i: usize, j: usize, overlap: usize },

    #[error("alpha {0} is not a tabulated level (0.01, 0.05, 0.10, 0.25, 0.50); use a Monte Carlo null distribution for arbitrary levels")]
    UntabulatedAlpha(f64),

    #[error(
        "M·effN = {0} is outside the calibrated range of the critical curves (must be at least 2)"
    )]
    OutsideCalibratedRange(f64),

    #[error("exhaustive enumeration supports 3 ≤ n ≤ 8, got n = {0}")]
    EnumerationSize(usize),

    #[error("standard errors unavailable: {0}")]
    StandardError(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context_suffix(ctx: &Option<String>) -> String {
    match ctx {
        Some(s) => format!(" (series '{s}')"),
        None => String::new(),
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. }
            | Error::HalfPair { .. }
            | Error::Structure(_)
            | Error::Config(_)
            | Error::Io(_) => ErrorClass::Parse,
            Error::InsufficientPairs { .. }
            | Error::DegenerateObserved(_)
            | Error::DegenerateScalar { .. }
            | Error::DegenerateSeries(_)
            | Error::InsufficientOverlap { .. }
            | Error::StandardError(_) => ErrorClass::Degenerate,
            Error::UntabulatedAlpha(_)
            | Error::OutsideCalibratedRange(_)
            | Error::EnumerationSize(_)
            | Error::InvalidArgument(_) => ErrorClass::Usage,
        }
    }

    /// Attach a series name to degeneracy errors raised by context-free kernels.
    pub fn in_series(self, name: &str) -> Error {
        match self {
            Error::DegenerateObserved(None) => Error::DegenerateObserved(Some(name.to_string())),
            Error::DegenerateScalar { kind, series: None } => Error::DegenerateScalar {
                kind,
                series: Some(name.to_string()),
            },
            Error::InsufficientPairs { n, min, .. } => Error::InsufficientPairs {
                series: name.to_string(),
                n,
                min,
            },
            Error::DegenerateSeries(msg) => Error::DegenerateSeries(format!("{name}: {msg}")),
            other => other,
        }
    }
}
