use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown {kind} '{name}'")]
    Lookup { kind: &'static str, name: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid design: {0}")]
    Design(String),
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("ill-conditioned correlation matrix: {0}")]
    Conditioning(String),
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),
    #[error("local error field is isolated at the query point: {0}")]
    Isolation(String),
    #[error("training failed for fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("model competition failed: {}", .0.join("; "))]
    Competition(Vec<String>),
    #[error("study failed: {0}")]
    Study(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by numerics or model training rather than bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::SingularFit(_)
            | Error::Conditioning(_)
            | Error::DegenerateOutput(_)
            | Error::Isolation(_)
            | Error::Competition(_)
            | Error::Study(_) => true,
            Error::Fold { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    pub fn is_argument(&self) -> bool {
        matches!(self, Error::Argument(_) | Error::Lookup { .. } | Error::Bounds(_))
    }
}
