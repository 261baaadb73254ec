//! Numerical core for stationary TASEP fluctuation theory.
//!
//! Everything here is `no_std` with `alloc`: special functions, Nyström
//! Fredholm determinants, the Airy-edge limit objects, the finite-size
//! Laguerre ensemble, the Painlevé II oracle, and single-replica samplers
//! for TASEP and last-passage percolation. Parallel drivers, file formats
//! and the command line live in the companion `stasep` crate.
#![no_std]

extern crate alloc;

pub mod airy_edge;
pub mod error;
pub mod fredholm;
pub mod laguerre_ensemble;
pub mod lpp_sim;
pub mod numerics;
pub mod painleve_oracle;
pub mod rng;
pub mod tasep_sim;

pub use error::{Error, Result};
