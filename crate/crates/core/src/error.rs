//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: bad group string, unparsable tail, invalid field parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configurable generation cap was exceeded (polynomial length, prime, arity).
    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    /// An enumeration budget was exceeded (orbit boxes, place sieves, coset tables).
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// Residue field too large for exhaustive solving.
    #[error("field of size {q} exceeds the exhaustive-search cap {cap}")]
    QTooLarge { q: u64, cap: u64 },

    /// Whole-tail p-th root requested on a tail with an exponent not divisible by p.
    #[error("exponent {exp} not divisible by p = {p} in p-th root")]
    NonDivisibleExponent { exp: i64, p: u32 },

    /// Polynomial evaluation with an unassigned variable.
    #[error("no assignment for variable {0}")]
    MissingAssignment(String),

    /// Operands built over different group or field specifications.
    #[error("mismatched specifications: {0}")]
    MismatchedSpec(String),

    /// Exponent fit rejected (constant counts, too few points).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Internal invariant violation; indicates a bug, never bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
