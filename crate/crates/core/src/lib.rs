//! Random Dirichlet polynomials with multiplicative weights, made computable.
//!
//! A polynomial here is a finite sum `D(s) = sum_{n in S} eps_n d_n n^{-sigma - it}`
//! over a support `S` of integers at least 2, with real weights `d_n`, a fixed
//! abscissa `0 <= sigma < 1/2`, and random signs `eps_n = +-1`. Writing each `n`
//! by its prime exponents turns `sup_t |D|` into the supremum of a trigonometric
//! polynomial on a finite-dimensional torus, which is where everything in this
//! crate operates:
//!
//! - [`numbertheory`]: prime tables, largest prime factors, smooth supports and
//!   their partition by leading prime, and the leading-prime blocks used by the
//!   exact lattice supremum.
//! - [`dickman`]: the smooth-density limit function `rho`, solved per unit
//!   interval, plus the semi-asymptotic density exponent and its empirical check.
//! - [`polynomial`]: evaluation on the line and on the torus, the lift that
//!   connects them, Lipschitz certificates, certified torus supremum search, the
//!   exact supremum over the half-period sign lattice, and line-grid scans.
//! - [`bounds`]: closed-form growth bounds and their gap analysis.
//! - [`montecarlo`]: reproducible sign sampling, expected-supremum estimation
//!   with per-draw bracket checks, a contraction check for centered additive
//!   noise, and rate tables across a grid of support sizes.
//!
//! All randomness is counter-based and keyed by `(seed, replicate, n)`, so every
//! estimate is bit-reproducible at any thread count.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod dickman;
pub mod error;
pub mod montecarlo;
pub mod numbertheory;
pub mod polynomial;

pub use error::{Error, Result};
