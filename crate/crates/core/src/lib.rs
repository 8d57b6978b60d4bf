//! Gibbs path measures, proximal drifts and the stochastic-quantization SPDE
//! on a desk-scale lattice.

pub mod convex;
pub mod functional;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod numerics;
pub mod potentials;
pub mod schrodinger;
pub mod spde;
pub mod tridiag;

pub use error::{Error, Result};
