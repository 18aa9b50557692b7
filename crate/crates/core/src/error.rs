use thiserror::Error;

/// Errors raised by the numerical core.
///
/// The CLI maps [`Error::is_budget`] failures to exit status 3 and everything
/// else that stems from bad input to exit status 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("sequence index {index} out of range (table holds {len} values)")]
    IndexOutOfRange { index: u64, len: usize },

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("sequence is not certified lacunary: {0}")]
    NotCertified(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("precision failure: {0}")]
    Precision(String),

    #[error("undecidable tie: {0}")]
    Tie(String),

    #[error("window has no usable Fourier transform: {0}")]
    NoTransform(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::BudgetExceeded(msg.into())
    }

    /// True for failures caused by precision or work budgets rather than by
    /// malformed input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_) | Error::Precision(_) | Error::Tie(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
