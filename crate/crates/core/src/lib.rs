//! Gauge-covariant magnetic Weyl calculus on phase-space lattices.
//!
//! Units: ħ = 1, `D = −i∂`, magnetic momenta `Π = D − A(Q)`.

pub mod error;
pub mod fft;
pub mod fields;
pub mod grid;
pub mod io;
pub mod moyal;
pub mod quadrature;
pub mod quantize;
pub mod spectral;
pub mod symbols;

pub use error::{Error, Result};

/// Project-wide sign in `[Π_j, Π_k] = σ·i·B_jk`.
pub const SIGMA: f64 = 1.0;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
