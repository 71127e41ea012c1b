use thiserror::Error;

use crate::syntax::{Calculus, EvalError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },

    #[error("unknown calculus `{0}` (expected pi, cmv+ or cmv)")]
    UnknownCalculus(String),

    #[error("{construct} is not part of {calculus}")]
    WrongCalculus { calculus: Calculus, construct: String },

    #[error("branching labels must be pairwise distinct")]
    DuplicateBranchLabel,

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cannot encode: {0}")]
    Encoding(String),

    #[error("the reduction graph has a cycle, so it has no finite set of maximal executions")]
    CyclicGraph,
}

impl Error {
    pub(crate) fn truncated() -> Self {
        Error::Inconclusive("reduction graph truncated at its limits".into())
    }
}
