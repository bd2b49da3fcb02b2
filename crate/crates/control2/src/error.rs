//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A matrix that was required to lie in SL2(Z) has determinant != 1.
    #[error("matrix has determinant {det}, expected 1")]
    BadDeterminant { det: String },

    /// Subgroup parameters outside the supported family.
    #[error("invalid subgroup parameters: {0}")]
    BadSpec(String),

    /// A matrix failed a required membership test.
    #[error("matrix is not a member of {group}: {context}")]
    NotMember { group: String, context: String },

    /// Coset enumeration exceeded the configured bound.
    #[error("coset enumeration for {group} exceeded the bound of {bound} cosets")]
    CosetBound { group: String, bound: usize },

    /// Exact integer arithmetic left the fixed-width window.
    #[error("integer overflow in exact matrix arithmetic ({context})")]
    Overflow { context: String },

    /// The ordinary projector did not stabilize within the iteration cap.
    #[error("ordinary idempotent did not stabilize within {cap} rounds")]
    IdempotentCap { cap: usize },

    /// Working precision too low to certify freeness of an ordinary part.
    #[error("ordinary part not free at precision 2^{k}; retry with larger k")]
    PrecisionTooLow { k: u32 },

    /// An operator pair that was required to commute does not.
    #[error("commutation precondition violated: {0}")]
    DoesNotCommute(String),

    /// Composition of maps with mismatched source/target.
    #[error("map composition mismatch: {0}")]
    CompositionMismatch(String),

    /// A structural invariant of the construction itself was violated.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
