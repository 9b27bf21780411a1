//! Numerical laboratory for the ground-state energy of dilute Bose gases
//! with two- and three-body repulsion.
//!
//! The crate computes the two-body scattering length `a(V)` and the
//! three-body scattering energy `b(W)` of compactly supported potentials,
//! and checks both sides of the dilute-gas energy law
//! `e(ρ) ≈ 4πaρ² + bρ³/6`:
//!
//! * lower-bound machinery: Dyson-type operator inequalities
//!   ([`dyson`]), exact small-system ground states and Temple's
//!   inequality ([`spectral`]);
//! * upper-bound machinery: a Jastrow trial state sampled by Metropolis
//!   Monte Carlo ([`jastrow`]).
//!
//! [`experiments`] ties these together into parameter sweeps.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dyson;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod jastrow;
pub mod linalg;
pub mod potentials;
pub mod radial;
pub mod scatter2;
pub mod scatter3;
pub mod spectral;
pub mod stats;

pub use error::{Error, ErrorKind, Result};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/scattering.md")]
    mod scattering {}
    #[doc = include_str!("../../../book/src/dyson.md")]
    mod dyson {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/jastrow.md")]
    mod jastrow {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
