//! Relativistic single-particle wave functions on a discretized spacetime box,
//! their probability interpretation, Lorentz boosts, sampling, and a truncated
//! Fock-space layer built on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod io;
pub mod lorentz;
pub mod modes;
pub mod particle;
pub mod sampler;
pub mod spacetime;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
