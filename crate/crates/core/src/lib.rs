//! fracfilt-core: numerical machinery for the nonlinear nonlocal diffusion
//! equation u_t = -(-Delta)^s Phi(u).
//!
//! The crate provides, layer by layer:
//!
//! - `specfun`: gamma, fractional-order modified Bessel K, structural constants
//! - `basis`: Dirichlet eigenstructure of an interval and the spectral
//!   fractional Laplacian, with exact sine transforms
//! - `extension`: cylinder and half-space extension operators, the
//!   Dirichlet-to-Neumann flux, and weighted energies
//! - `singular`: the free-space fractional Laplacian by singularity-split
//!   quadrature, cut-off functions and their scaling scans
//! - `evolve`: the implicit resolvent time stepper, comparison and
//!   monotonicity runs, translation trick
//! - `duality`: backward-in-time parabolic solves with rough diffusion
//!   coefficients, the associated energy identity and uniqueness witnesses
//! - `acceptance`: the end-to-end verification suite used by the test
//!   harness and the CLI selftest

pub mod acceptance;
pub mod basis;
pub mod duality;
pub mod error;
pub mod evolve;
pub mod extension;
pub mod quad;
pub mod shapes;
pub mod singular;
pub mod specfun;

pub use error::{Error, Result};
