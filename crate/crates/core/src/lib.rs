//! Numerical laboratory for semiclassical quasimodes of the Dirichlet
//! Laplacian on the unit disk.
//!
//! The crate is organized bottom-up:
//!
//! * [`specfun`]: Bessel functions `J_m` and their zeros.
//! * [`quadrature`], [`linalg`]: Gauss–Legendre rules and a dense Hermitian
//!   eigensolver.
//! * [`diskmodes`]: the Dirichlet eigenbasis and Galerkin matrices of `−Δ + V`.
//! * [`billiard`]: the classical billiard flow and its action-angle chart.
//! * [`quasimode`]: builders for quasimode families and their residuals.
//! * [`phasespace`]: `(E, J)` spectra, Husimi densities, mass diagnostics and
//!   the two-scale splitting around a rational torus.
//! * [`effective`]: the one-dimensional Floquet operator on a periodic torus.
//! * [`observability`]: Gram matrices and observability-constant sweeps.

pub mod billiard;
pub mod diskmodes;
pub mod effective;
pub mod error;
pub mod io;
pub mod linalg;
pub mod observability;
pub mod phasespace;
pub mod potential;
pub mod quadrature;
pub mod quasimode;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
