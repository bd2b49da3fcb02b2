//! Exact linear algebra over Z and over Z/2^k.
//!
//! `int` holds the integer matrices that carry maps between abelianizations,
//! with Smith normal form for cokernel and divisor computations. `dyadic`
//! holds the mod-2^k side: the ordinary idempotent e = lim U^{n!}, ordinary
//! parts with explicit bases, co-invariants, and presented-module comparison.

pub mod dyadic;
pub mod int;
