//! Doubly periodic solutions of the SU(N+1) Chern–Simons–Higgs system.

pub mod cartan;
pub mod cli;
pub mod constraint;
pub mod energy;
pub mod solver;
pub mod error;
pub mod torus;
pub mod tridiag;

pub use error::{Error, Result};
