use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain an operation accepts.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// Two inputs disagree on a dimension or a length.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    /// A combinatorial guard tripped before the work became intractable.
    #[error("capacity exceeded: {what} would exceed the cap of {cap}")]
    Capacity { what: String, cap: usize },

    #[error("corrupt filtration: {0}")]
    CorruptFiltration(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
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
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
