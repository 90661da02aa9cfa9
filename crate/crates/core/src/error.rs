use thiserror::Error;

/// Errors raised across the degradation/scheduling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A feature or input value outside the domain an operation accepts.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// An invalid parameter or argument combination.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A feature column with (near) zero variance cannot be standardized.
    #[error("degenerate feature `{0}`: variance below floor")]
    DegenerateFeature(String),

    /// An aging test whose loss underflowed before reaching end of test.
    #[error("aging test {test_id} did not terminate within {cap} cycles")]
    Divergence { test_id: String, cap: usize },

    /// Non-finite loss during training.
    #[error("training diverged at epoch {epoch}")]
    Training { epoch: usize },

    /// The model is used before it holds trained parameters.
    #[error("model state error: {0}")]
    State(String),

    /// The scheduling problem has no feasible solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The branch-and-bound search ran out of its node or time budget.
    #[error("solver budget exhausted ({reason}); incumbent objective {incumbent:?}")]
    Timeout {
        reason: String,
        incumbent: Option<f64>,
    },

    /// An error raised inside a heuristic iteration.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Strips any iteration annotation and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Iteration { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
