//! Truncated Fock-space toolkit for three-mode spontaneous parametric
//! down-conversion (SPDC) states and their non-Gaussian entanglement
//! witnesses.
//!
//! The crate is organized bottom-up:
//!
//! - [`algebra`]: symbolic polynomials in bosonic ladder operators, kept in
//!   normal order, with quadrature (Weyl-ordered) monomials and the moment
//!   bases used for measurement optimization.
//! - [`fock`]: truncated multimode Fock spaces, sparse realization of
//!   operator polynomials, pure states, spectral ensembles and second-moment
//!   statistics.
//! - [`dynamics`]: the effective trilinear SPDC generator, thermal initial
//!   ensembles and unitary propagation with a norm contract.
//! - [`witness`]: quantum Fisher information from spectral data, the
//!   generator optimization, separability bounds and the Hillery-Zubairy
//!   test.
//! - [`squeezing`]: nonlinear squeezing parameters and their closed-form
//!   optimization over moment bases.
//!
//! Everything here is `no_std` + `alloc`; file formats, configuration and the
//! command line live in the companion `trispdc` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebra;
pub mod dynamics;
mod error;
pub mod fock;
mod linalg;
pub mod squeezing;
pub mod witness;

pub use error::{Error, Result};

pub use num_complex::Complex64;
