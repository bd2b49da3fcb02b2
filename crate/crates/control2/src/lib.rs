//! Computational verification of a 2-adic control theorem for modular curves.
//!
//! For odd N and r >= 2, the homology of the open modular curve of level
//! N 2^r is the abelianization of Gamma_1(N 2^r), a free Z-module carried
//! here by an explicit Reidemeister-Schreier basis. The crate builds the
//! interpolating subgroups Phi_r^s = Gamma_1(N 2^s) /\ Gamma_0(2^r), the
//! transfer map V, the Atkin operator U_2 = inc . (t - t^{-1}) . V for
//! t = diag(1, 2), and the diamond action of (1 + 4Z_2)/(1 + 2^r Z_2), all
//! as exact integer matrices. Working mod 2^k it cuts out ordinary parts
//! with the idempotent e = lim U^{n!} and machine-checks, level by level:
//!
//!   * surjectivity of the d-coordinate map eta_r and its Gamma^0(2)
//!     restriction,
//!   * the commutation laws tying U, U', the level maps pi, the diamond
//!     matrices and the transfer together,
//!   * the control isomorphism (H_r ord)/(gamma_s - 1) = H_s ord, its two
//!     intermediate factors through Phi_r^s, and their composition,
//!   * rank stability of the ordinary part in r, against a Nakayama count
//!     at the bottom level,
//!   * a finite-level dual-rank statement for the transfer.
//!
//! The `verifier` module orchestrates these checks over a configurable
//! (N, r, s) grid and emits a deterministic JSON report; the companion CLI
//! crate exposes it as the `control2` binary.

pub mod error;
pub mod linalg;
pub mod mat2;
pub mod operators;
pub mod par;
pub mod presentations;
pub mod subgroups;
pub mod verifier;

pub use error::{Error, Result};
pub use mat2::Mat2;
pub use subgroups::SubgroupSpec;
