use thiserror::Error;

use crate::model::ThreadId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("duplicate thread id {0}")]
    DuplicateThreadId(ThreadId),
    #[error("unknown builtin function `{0}`")]
    UnknownFunction(String),
    #[error("unknown thread id {0}")]
    UnknownThreadId(ThreadId),
    #[error("path mismatch at position {index}: tgt of letter {index} is `{tgt}` but src of letter {next} is `{src}`", next = index + 1)]
    PathMismatch { index: usize, tgt: String, src: String },
    #[error("vertex `{name}` declared with conflicting types `{first}` and `{second}`")]
    ConflictingVertex { name: String, first: String, second: String },
    #[error("letter {0} occurs more than once in the word")]
    RepeatedLetter(ThreadId),
    #[error("branch words share letter {0}")]
    OverlappingBranchLetters(ThreadId),
    #[error("branch shape: {0}")]
    BranchShape(String),
    #[error("invalid parameter for `{func}`: {msg}")]
    InvalidParam { func: String, msg: String },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error at {path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("type error in {context}: expected {expected}, got {got}")]
    Type { context: String, expected: String, got: String },
    #[error("join flags do not match branch lists: {0}")]
    FlagMismatch(String),
    #[error("thread {id} is not classified {expected}")]
    Classification { id: ThreadId, expected: &'static str },
    #[error("letter {0} repeated inside a pipeline segment")]
    RepeatedLetterInSegment(ThreadId),
    #[error("pipeline channel closed unexpectedly")]
    ChannelClosed,
    #[error("worker thread panicked")]
    WorkerPanicked,
}

impl Error {
    /// Validation errors reject a program before it runs; everything else is
    /// a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DuplicateThreadId(_)
                | Error::UnknownFunction(_)
                | Error::UnknownThreadId(_)
                | Error::PathMismatch { .. }
                | Error::ConflictingVertex { .. }
                | Error::RepeatedLetter(_)
                | Error::OverlappingBranchLetters(_)
                | Error::BranchShape(_)
                | Error::InvalidParam { .. }
                | Error::Parse { .. }
                | Error::Schema { .. }
        )
    }

    pub(crate) fn type_mismatch(context: impl Into<String>, expected: impl ToString, got: impl ToString) -> Self {
        Error::Type { context: context.into(), expected: expected.to_string(), got: got.to_string() }
    }

    pub(crate) fn schema(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Schema { path: path.into(), msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
