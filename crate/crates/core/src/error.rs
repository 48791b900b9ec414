use thiserror::Error;

use crate::corpus::LevelTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node not found: {0}")]
    NodeNotFound(String),

    #[error("level {found} is not a {expected} level")]
    LevelMismatch { expected: &'static str, found: LevelTag },

    #[error("rank mismatch: {0}")]
    RankMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("citation parse error at byte {position}: {message}")]
    Citation { position: usize, message: String },

    #[error("corpus violates structural invariants: {0}")]
    Invalid(String),

    #[error("infeasible synthetic config: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
