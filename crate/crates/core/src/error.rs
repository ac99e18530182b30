use thiserror::Error;

use crate::lang::{Ast, LangError};
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("candidate is not a constituent of the program: {candidate}")]
    ConstituentViolation { candidate: String },
    #[error("no fragment of at most {max_k} statements is both sufficient and necessary")]
    FragmentSearchExhausted { max_k: usize },
    #[error("mutation did not reach a fixpoint within {cap} passes")]
    FixpointCapExceeded { cap: usize, last: Box<Ast> },
    #[error("program has {tokens} body tokens, over the limit of {limit}")]
    TokenLimitExceeded { tokens: usize, limit: usize },
    #[error("model `{model}` does not report probabilities")]
    NoProbabilities { model: String },
    #[error("no corpus entries carry label `{label}`")]
    NoCandidates { label: String },
}

impl Error {
    /// Errors that mean "this candidate is not acceptable" rather than
    /// "the search cannot continue".
    pub fn is_rejection(&self) -> bool {
        matches!(self, Error::ConstituentViolation { .. } | Error::Lang(LangError::SubtreeNotFound { .. }))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
