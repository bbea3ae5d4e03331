use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownLabel(String),
    Duplicate(String),
    DimensionMismatch(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UnknownLabel(m) => write!(f, "unknown label {m}"),
            ParseErrorKind::Duplicate(m) => write!(f, "duplicate definition of {m}"),
            ParseErrorKind::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {col}: {kind}")]
    Parse {
        line: usize,
        col: usize,
        kind: ParseErrorKind,
    },
    #[error("{table} row sum is {sum} at {location}; expected 1")]
    RowSum {
        table: &'static str,
        location: String,
        sum: f64,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("declared criterion {declared} contradicts the reward tables: {reason}")]
    CriterionMismatch { declared: String, reason: String },
    #[error("discount 1 makes the truncation horizon undefined")]
    UndiscountedHorizon,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("enumeration too large: {count} exceeds the cap of {cap}")]
    EnumerationTooLarge { count: String, cap: u128 },
    #[error("unreachable history {0}")]
    UnreachableHistory(String),
    #[error("undefined decision rule for agent {agent} at history {history}")]
    UndefinedDecisionRule { agent: usize, history: String },
    #[error("impossible observation {0}: probability zero")]
    ImpossibleObservation(String),
    #[error("inconsistent occupancy: {0}")]
    InconsistentOccupancy(String),
    #[error("time step mismatch: expected {expected}, found {found}")]
    TimeMismatch { expected: usize, found: usize },
    #[error("unknown suite {0}")]
    UnknownSuite(String),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

impl Error {
    pub(crate) fn parse(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { line, col, kind }
    }
}
