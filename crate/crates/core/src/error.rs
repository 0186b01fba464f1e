use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// `k` must be at least 1 and `m` must lie in `1..=k`.
    #[error("invalid exceedance parameters k={k}, m={m}: need k >= 1 and 1 <= m <= k")]
    InvalidSpec { k: u32, m: u32 },

    #[error("value {0} is not a probability in [0, 1]")]
    NotAProbability(f64),

    /// A closed form was requested at a point where it is singular or undefined.
    #[error("{op} is undefined at p = {p}")]
    Domain { op: &'static str, p: f64 },

    #[error("a chain needs at least one stage")]
    EmptyChain,

    #[error("malformed chain: {0}")]
    ChainFormat(String),

    #[error("{0}")]
    Usage(String),

    #[error("outcome enumeration limited to k <= {limit}, got k = {k}")]
    ResourceLimit { k: u32, limit: u32 },

    /// A two-stage chain produced more than one inflection point. The
    /// two-stage result is a theorem, so this indicates a numerical defect.
    #[error("two-stage chain {chain} reported {count} inflection points")]
    TwoStageViolation { chain: String, count: usize },
}
