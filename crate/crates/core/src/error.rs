use thiserror::Error;

/// Errors raised by the protocol library.
///
/// Protocol outcomes (a test rejecting, an oracle being doubted) are verdicts,
/// not errors; this type covers contract violations and budget limits only.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero in GF({0})")]
    DivisionByZero(u64),
    #[error("field mismatch: GF({0}) vs GF({1})")]
    FieldMismatch(u64, u64),
    #[error("modulus {0} is not a supported prime")]
    NotPrime(u64),
    #[error("interpolation points must have distinct x-coordinates (and 1..=64 of them)")]
    DegenerateInterpolation,
    #[error("arity error: {0}")]
    Arity(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("oracle failure: {0}")]
    OracleFailure(String),
    #[error("self-reduction violation: query of size {query} is not smaller than input of size {input}")]
    SelfReductionViolation { query: usize, input: usize },
    #[error("adversary construction: {0}")]
    AdversaryConstruction(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arity(msg: impl Into<String>) -> Error {
    Error::Arity(msg.into())
}
