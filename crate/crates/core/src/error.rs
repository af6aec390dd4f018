use thiserror::Error;

/// Errors raised while parsing, simulating, or designing filters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid number '{token}'")]
    Value { token: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Domain(String),

    #[error("singular system{}: check unknown {unknown}", context.as_ref().map(|c| format!(" at {c}")).unwrap_or_default())]
    Singular {
        unknown: String,
        context: Option<String>,
    },

    #[error("no convergence at t={time:e} s after {iterations} iterations")]
    NonConvergence { time: f64, iterations: usize },

    #[error("root finder did not converge for degree-{degree} polynomial")]
    RootFinding { degree: usize },

    #[error("unsupported element {0}")]
    Unsupported(String),

    #[error("{0}")]
    Analysis(String),

    #[error("infeasible design: {0}")]
    Infeasible(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach a location (frequency, time) to a singular-system error.
    pub(crate) fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            Error::Singular { unknown, .. } => Error::Singular {
                unknown,
                context: Some(ctx.into()),
            },
            other => other,
        }
    }

    /// True for failures of the numerical engine rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::NonConvergence { .. } | Error::RootFinding { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
