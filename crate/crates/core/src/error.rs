use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("prime {0} is not in the configured prime set")]
    UnknownPrime(u64),
    #[error("invalid prime set: {0}")]
    InvalidPrimes(String),
    #[error("modulus must be at least 1, got {0}")]
    BadModulus(String),
    #[error("substituting for `{0}` would capture a bound variable")]
    Capture(String),
    #[error("variable `{0}` has no value in the assignment")]
    Unassigned(String),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
    #[error("ill-formed input: {0}")]
    IllFormed(String),
    #[error("residue enumeration needs {needed} cases, cap is {cap}")]
    ResidueCap { needed: u128, cap: u64 },
    #[error("formula grew to {size} literals, node cap is {cap}")]
    NodeCap { size: usize, cap: usize },
    #[error("balls over different primes ({0} and {1})")]
    PrimeMismatch(u64, u64),
    #[error("operation needs a finite radius")]
    InfiniteRadius,
    #[error("hole is not strictly inside the outer ball")]
    HoleOutside,
    #[error("holes are not pairwise disjoint")]
    HolesOverlap,
    #[error("swiss cheese is empty")]
    EmptyCheese,
}

pub type Result<T> = std::result::Result<T, Error>;
