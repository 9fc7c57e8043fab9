use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("expression parse error at offset {offset}: {message}")]
    ExprParse { offset: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("variable `{0}` is not bound by the assignment")]
    Unbound(String),

    #[error("conditional probability undefined: P({0}) = 0")]
    UndefinedConditional(String),

    #[error("co-occurrence rate undefined: {0}")]
    UndefinedCr(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid rewrite: {0}")]
    Rewrite(String),

    #[error("certificate rejected: {0}")]
    Certificate(String),

    #[error("graph is not a TCG")]
    NotTcg,

    #[error("table is not Markov with respect to the graph: {0}")]
    NotMarkov(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidModel(message.into())
    }

    pub(crate) fn precondition(message: impl Into<String>) -> Self {
        Error::Precondition(message.into())
    }

    pub(crate) fn rewrite(message: impl Into<String>) -> Self {
        Error::Rewrite(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
