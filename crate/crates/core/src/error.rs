use std::fmt;

/// A 1-based line/column position in statement text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("ingestion error at line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("plan error: {0}")]
    Plan(String),

    #[error("pivot error: carry attribute `{attribute}` is not constant for key {key}")]
    Pivot { key: String, attribute: String },

    #[error("definition error: {0}")]
    Definition(String),

    #[error("encoding error: {0}")]
    Encoding(String),

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("lex error at {span}: {message}")]
    Lex { span: Span, message: String },

    #[error("parse error at {span}: {message}{}", expected_suffix(.expected))]
    Parse {
        span: Span,
        message: String,
        expected: Vec<String>,
    },

    #[error("resolution error at {span}: {message}")]
    Resolve { span: Span, message: String },
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected one of: {})", expected.join(", "))
    }
}

impl Error {
    /// Source position for errors raised from statement text.
    pub fn span(&self) -> Option<Span> {
        match self {
            Error::Lex { span, .. } | Error::Parse { span, .. } | Error::Resolve { span, .. } => {
                Some(*span)
            }
            _ => None,
        }
    }

    pub(crate) fn plan(msg: impl Into<String>) -> Self {
        Error::Plan(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
