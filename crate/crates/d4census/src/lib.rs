//! Arithmetic of quadratic extensions of quadratic fields.
//!
//! This crate enumerates pairs (L, K) where K is a quadratic field and
//! L = K(√α) is a quadratic extension, classifies their Galois closures
//! (V4, C4, or dihedral D4 octic), computes local invariants at every prime,
//! evaluates the associated mass constants and Euler products in rigorous
//! ball arithmetic, and cross-checks everything against independent
//! brute-force oracles.
//!
//! Module map:
//! - [`arith`]: elementary integer/modular helpers shared everywhere.
//! - [`qfield`]: quadratic fields — class groups, units, S-unit square classes.
//! - [`padic`]: square-class and conductor arithmetic over ℚ_p and its
//!   quadratic extensions (including the wild dyadic cases).
//! - [`relquad`]: relative quadratic extensions L = K(√α): discriminants,
//!   splitting types, refined invariants, heights, Galois type, flip.
//! - [`localmass`]: local étale pair classes over ℚ_p / ℚ₂ / ℝ, their
//!   automorphism orders and octic discriminant exponents, mass sums.
//! - [`charcount`]: character-sum counting formulas for the Dirichlet series
//!   of the family, with an enumeration oracle.
//! - [`ball`]: midpoint–radius big-integer ball arithmetic.
//! - [`constants`]: rigorous evaluation of the leading constants.
//! - [`census`]: enumeration/counting drivers and report generation.
//! - [`oracle`]: independent slow reimplementations used only by tests.

pub mod arith;
pub mod ball;
pub mod census;
pub mod charcount;
pub mod constants;
pub mod localmass;
pub mod oracle;
pub mod padic;
pub mod qfield;
pub mod relquad;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A discriminant (or similar datum) does not define a quadratic field.
    #[error("not a valid quadratic field: {0}")]
    InvalidField(String),

    /// A requested computation exceeded its configured search bound.
    #[error("search bound exceeded: {0}")]
    BoundExceeded(String),

    /// A runtime hypothesis (e.g. odd S-class number) fails for the input.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// An element is not valid in the given field/ring context.
    #[error("invalid element: {0}")]
    InvalidElement(String),

    /// The algebra in question is not a field where a field is required.
    #[error("not a field: {0}")]
    NotAField(String),

    /// An operation requiring a specific Galois type was called on another.
    #[error("wrong Galois type: {0}")]
    WrongGaloisType(String),

    /// A local-condition collection (or its textual spec) is malformed.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// No field satisfies the requested local conditions.
    #[error("empty fiber: {0}")]
    EmptyFiber(String),

    /// A Kummer generator violates the preconditions of an operation.
    #[error("invalid alpha: {0}")]
    InvalidAlpha(String),

    /// An Euler factor is invalid (e.g. nonpositive where positivity is needed).
    #[error("invalid factor: {0}")]
    InvalidFactor(String),

    /// A memory/time budget was exceeded.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
