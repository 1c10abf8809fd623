use thiserror::Error;

use crate::optimizer::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{what} = {value} is out of range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("enumeration guard exceeded for {what}: {size} > {limit}")]
    GuardExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("download cost D = {d} is outside the feasible interval ({lo}, {hi}]")]
    InfeasibleCost { d: f64, lo: f64, hi: f64 },

    #[error("malformed query: {0}")]
    MalformedQuery(String),

    #[error("malformed allocation: {0}")]
    MalformedAllocation(String),

    #[error("decode failure: {0}")]
    Decode(String),

    #[error("message store: {0}")]
    Store(String),

    #[error(transparent)]
    Lp(#[from] LpError),
}
