use thiserror::Error;

use crate::decimal::FixedDecimal;
use crate::time::Timestamp;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("time {at} is before the price function start {start}")]
    TimeBeforeStart { at: Timestamp, start: Timestamp },

    #[error("timestamp {at} precedes the last event time {last}")]
    NonMonotoneTimestamp { at: Timestamp, last: Timestamp },

    #[error("negative deposit {0}")]
    NegativeDeposit(FixedDecimal),

    #[error("negative coin amount {0}")]
    NegativeAmount(FixedDecimal),

    #[error("insufficient balance: requested {requested}, available {available}")]
    InsufficientBalance {
        requested: FixedDecimal,
        available: FixedDecimal,
    },

    /// `truncated` marks a log whose last line was cut short.
    #[error("malformed log at seq {seq}: {reason}")]
    MalformedLog {
        seq: u64,
        reason: String,
        truncated: bool,
    },

    #[error("arithmetic overflow")]
    Overflow,

    #[error("division by zero")]
    DivisionByZero,

    #[error("invalid price function: {0}")]
    InvalidPriceFunction(String),

    #[error("invalid decimal {0:?}")]
    InvalidDecimal(String),

    #[error("decimal {0:?} needs more than 18 fractional digits")]
    DecimalPrecision(String),

    #[error("invalid timestamp {0:?}")]
    InvalidTimestamp(String),

    #[error("invalid participant id {0:?}")]
    InvalidParticipant(String),

    #[error("invalid digest {0:?}")]
    InvalidDigest(String),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("action {index}: {source}")]
    Action {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },
}

impl Error {
    /// Stable machine-readable name of the variant, used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TimeBeforeStart { .. } => "TimeBeforeStart",
            Error::NonMonotoneTimestamp { .. } => "NonMonotoneTimestamp",
            Error::NegativeDeposit(_) => "NegativeDeposit",
            Error::NegativeAmount(_) => "NegativeAmount",
            Error::InsufficientBalance { .. } => "InsufficientBalance",
            Error::MalformedLog { .. } => "MalformedLog",
            Error::Overflow => "Overflow",
            Error::DivisionByZero => "DivisionByZero",
            Error::InvalidPriceFunction(_) => "InvalidPriceFunction",
            Error::InvalidDecimal(_) => "InvalidDecimal",
            Error::DecimalPrecision(_) => "DecimalPrecisionError",
            Error::InvalidTimestamp(_) => "InvalidTimestamp",
            Error::InvalidParticipant(_) => "InvalidParticipant",
            Error::InvalidDigest(_) => "InvalidDigest",
            Error::Schema { .. } => "SchemaError",
            Error::Action { source, .. } => source.kind(),
            Error::Invariant { .. } => "InvariantViolation",
        }
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn malformed(seq: u64, reason: impl Into<String>) -> Self {
        Error::MalformedLog {
            seq,
            reason: reason.into(),
            truncated: false,
        }
    }

    pub(crate) fn truncated(seq: u64) -> Self {
        Error::MalformedLog {
            seq,
            reason: "truncated line".into(),
            truncated: true,
        }
    }
}
