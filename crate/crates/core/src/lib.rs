//! Influence-functional kernels, non-Gaussian noise and nonlinear Langevin
//! dynamics for a quantum Brownian particle coupled through `f(x)` to the
//! squared positions and momenta of a finite zero-temperature oscillator bath.

pub mod bath;
pub mod cli;
pub mod error;
pub mod fdr;
pub mod grid;
pub mod kernels;
pub mod langevin;
pub mod noise;
pub mod poly;

pub use error::{Error, Result};
