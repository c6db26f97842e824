//! Error types shared across the crate.

use thiserror::Error;

/// What went wrong while parsing a directive or a logical line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Directive word not in the supported inventory.
    UnknownDirective,
    /// Syntactically broken directive or statement (unbalanced parentheses,
    /// interrupted continuation, bad reduction operator, ...).
    Malformed,
    /// `!$acc&` continuation with no preceding `!$acc` line.
    OrphanContinuation,
}

#[derive(Debug, Error)]
pub enum Error {
    /// Input is not usable as free-form Fortran text.
    #[error("input error: {0}")]
    Input(String),

    /// Line-addressed parse failure. Line numbers are 1-based.
    #[error("line {line}: {message}")]
    Parse {
        line: usize,
        kind: ParseErrorKind,
        message: String,
    },

    /// Mismatched region pairing (`parallel`/`end parallel`, ...).
    #[error("structure error at line {open_line}{}: {message}", close_line.map(|l| format!(" (paired with line {l})")).unwrap_or_default())]
    Structure {
        open_line: usize,
        close_line: Option<usize>,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line0: usize, kind: ParseErrorKind, message: impl Into<String>) -> Self {
        Error::Parse {
            line: line0 + 1,
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn structure(open0: usize, close0: Option<usize>, message: impl Into<String>) -> Self {
        Error::Structure {
            open_line: open0 + 1,
            close_line: close0.map(|l| l + 1),
            message: message.into(),
        }
    }

    /// Kind accessor for tests and callers that dispatch on parse failures.
    pub fn parse_kind(&self) -> Option<ParseErrorKind> {
        match self {
            Error::Parse { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
