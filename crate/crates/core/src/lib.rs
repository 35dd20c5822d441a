//! Synthesis of polynomial stochastic barrier functions through Bernstein
//! relaxations.
//!
//! A barrier `B(x)` over a polynomial system `x' = f(x) + v` is found by a
//! linear program whose constraints are Bernstein coefficients of `B` (and of
//! its expected one-step increase) over a family of hyperrectangles. The
//! solution certifies `P(safe for K steps) >= 1 - (eta + K * gamma)`.
//!
//! The crate is `no_std` and only needs `alloc`. Solving the LP is delegated to
//! an [`lp::LpSolver`] implementation supplied by the caller.

#![no_std]

extern crate alloc;

pub mod adaptive;
pub mod bernstein;
mod error;
pub mod expectation;
pub mod lp;
pub mod matrix;
pub mod num;
pub mod poly;
pub mod regions;
pub mod verify;

pub use error::{Error, Result};
pub use lp::{Certificate, DegreeForm, LpSolver, Problem, SynthesisConfig};
pub use poly::{MultiIndex, MultiPoly};
pub use regions::{HyperRect, RegionPartition};
