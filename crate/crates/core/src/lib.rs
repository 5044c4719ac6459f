//! Asymptotic profiles for complex-valued nonlinear Klein-Gordon equations:
//! resonant Fourier coefficients, phase-corrected profiles, residual decay
//! diagnostics and a 1D pseudo-spectral solver.

pub mod cli;
pub mod coeffs;
pub mod elliptic;
pub mod error;
pub mod fit;
pub mod grid;
pub mod hyperbolic;
pub mod profiles;
pub mod solver;

pub use error::{Error, Result};
