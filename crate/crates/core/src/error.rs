use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {p} exceeds the configured cap {cap}")]
    TooLarge { p: u64, cap: u64 },
    #[error("prime {p} is too small (need p > {min})")]
    PrimeTooSmall { p: u64, min: u64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("cost {cost} exceeds cap {cap} for {what}")]
    CostCapExceeded { what: &'static str, cost: u128, cap: u128 },
    #[error("character tuples are not disjoint (shared exponent {0})")]
    NotDisjoint(u64),
    #[error("root {root} of multiplicity {multiplicity} is divisible by the character order {order}")]
    OrderViolation { root: u64, multiplicity: usize, order: u64 },
    #[error("tables live over different fields (p = {0} vs {1})")]
    ContextMismatch(u64, u64),
    #[error("set is not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("element is not an involution")]
    NotInvolution,
    #[error("profile mismatch: {0}")]
    ProfileMismatch(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("representation cap exceeded: {0}")]
    CapExceeded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("validation error in `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
