use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the range a model is defined on.
    #[error("{quantity} = {value} is outside the supported range: must be {bound}")]
    Domain {
        quantity: &'static str,
        value: f64,
        bound: String,
    },

    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("integration diverged at step {step} (t = {time} s)")]
    Divergence { step: usize, time: f64 },

    #[error("design point (r_g = {gap_radius} m, n = {gear_ratio}): {source}")]
    AtDesign {
        gap_radius: f64,
        gear_ratio: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    NotFound(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("no feasible design for age {age} within bounds; binding constraint: {binding}")]
    Infeasible { age: f64, binding: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn at_design(self, gap_radius: f64, gear_ratio: f64) -> Self {
        match self {
            e @ Error::AtDesign { .. } => e,
            e => Error::AtDesign {
                gap_radius,
                gear_ratio,
                source: Box::new(e),
            },
        }
    }

    /// True for failures caused by the numerical integration blowing up.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::AtDesign { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
