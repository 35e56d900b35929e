use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown game id `{0}`")]
    UnknownGame(String),

    #[error("game mismatch: `{0}` vs `{1}`")]
    GameMismatch(String, String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate agent: {0}")]
    Degenerate(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration { iteration: usize, source: Box<Error> },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error comes from writing into a closed pipe.
    pub fn is_broken_pipe(&self) -> bool {
        use std::io::ErrorKind::BrokenPipe;
        match self {
            Error::Io(e) => e.kind() == BrokenPipe,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(io) if io.kind() == BrokenPipe),
            Error::Json(e) => e.io_error_kind() == Some(BrokenPipe),
            Error::AtIteration { source, .. } => source.is_broken_pipe(),
            _ => false,
        }
    }
}
