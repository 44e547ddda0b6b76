use thiserror::Error;

/// Errors raised by the algebra, the oracle and the file formats.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid precision context: {0}")]
    InvalidContext(String),

    #[error("level {level} exceeds the tower depth bound {n_cap}")]
    LevelOutOfRange { level: u32, n_cap: u32 },

    #[error("divisor polynomial is not monic")]
    NotMonic,

    #[error("polynomial is not distinguished: {0}")]
    NotDistinguished(String),

    #[error("polynomial shares a factor with some omega_n: {0}")]
    NotCoprimeToOmega(String),

    #[error("polynomial vanishes modulo p^{prec}")]
    PrecisionExhausted { prec: u32 },

    #[error("leading coefficient is not invertible modulo p^prec")]
    DegeneratePrecision,

    #[error("modules live over different precision contexts")]
    ContextMismatch,

    #[error("characteristic ideal is only represented for torsion modules (rank {0})")]
    NotTorsion(usize),

    #[error("module has a cyclotomic factor; reconstruction needs all torsion factors coprime to every omega_n")]
    CyclotomicFactorPresent,

    #[error("strict mode rejects the level-0 cyclotomic factor T")]
    StrictModeViolation,

    #[error("not a Mordell-Weil shaped module: {0}")]
    InvalidMwShape(String),

    #[error("rank sequence is not realizable: {0}")]
    UnrealizableRankSequence(String),

    #[error("growth law has no integer fit: {0}")]
    NoFit(String),

    #[error("exponent must be at least 1")]
    ZeroExponent,

    #[error("{0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
