//! Exact construction and verification of the `d + 1` mutually unbiased
//! bases of `C^d` for prime-power dimensions `d = p^n`.
//!
//! The bases are the discrete Fourier transform `F = F_p^{⊗n}` together with
//! the rotation operators `R_θ`, `θ ∈ GF(p^n)`. Every `R_θ` is a
//! block-circulant matrix with circulant blocks, built as a linear
//! combination of the shift operators `X_θ`.
//!
//! All arithmetic is exact: matrix entries live in the ring of cyclotomic
//! integers `Z[ζ_m]` (`m = p` for odd `p`, `m = 4` for `p = 2`) and the
//! `1/√d` normalisations are carried symbolically as a power of `p^{-1/2}`.
//! Unitarity, the Hadamard property and unbiasedness thereby reduce to
//! integer identities.
//!
//! The crate is `no_std` (it needs `alloc`). The `parallel` feature enables
//! data-parallel verification loops through rayon.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cyclotomic;
pub mod error;
pub mod galois;
pub mod mub;
pub mod operators;
pub mod weil;

mod par;

pub use cyclotomic::{CycInt, ScaledValue};
pub use error::{Error, Result};
pub use galois::{find_irreducible, FieldElement, FieldSpec, PrimeResidue};
pub use mub::{build_mub_set, verify_mub_set, verify_unbiased_pair, Mode, MubReport, MubSet};
pub use operators::{ExactMatrix, Structure};
