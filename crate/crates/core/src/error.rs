use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or argument is outside its admissible range.
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    /// A policy tried to spend more energy than the battery holds.
    #[error("energy causality violated{}: consumed {consumed} with only {available} available", slot.map(|s| format!(" in slot {s}")).unwrap_or_default())]
    EnergyCausality {
        slot: Option<u64>,
        consumed: f64,
        available: f64,
    },

    /// The closed-form cost-aware split needs a strictly positive sampling cost.
    #[error("sampling cost must be positive for the cost-aware split (got {0})")]
    DegenerateCost(f64),

    /// The DP solver only handles arrival models with finite support.
    #[error("unsupported arrival model: {0}")]
    UnsupportedModel(String),

    /// Relative value iteration hit its iteration cap.
    #[error("value iteration did not converge after {iterations} iterations (span {span:e})")]
    Convergence { iterations: usize, span: f64 },

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
