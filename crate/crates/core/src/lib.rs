//! Frequency and amplitude extraction from finite-time, sampled, noisy
//! multi-exponential signals, via a generalized eigenvalue problem in a
//! prolate spheroidal wave function basis.
//!
//! The library is organized bottom-up:
//! * [`quad`]: Gauss-Legendre quadrature.
//! * [`pswf`]: prolate spheroidal wave functions and their eigenvalues.
//! * [`signal`]: line spectra, sampling grids, and noise models.
//! * [`sampling`]: prolate and sinc interpolation of band-limited signals.
//! * [`solver`]: Galerkin assembly of the spectral pencil, rank detection,
//!   eigenvalue filtering, and amplitude recovery.
//! * [`quantum`]: small-Hamiltonian harness producing autocorrelation and
//!   observable signals, shot-noise models, and the hybrid pipeline.
//! * [`periodogram`]: FFT baseline for contrast experiments.
//! * [`scan`]: reproducible parameter scans (transition, sampling, noise).
//! * [`io`]: CSV/JSON readers and writers for all of the above.

pub mod error;
pub mod linalg;
pub mod quad;
pub mod pswf;
pub mod sampling;
pub mod signal;
pub mod solver;
pub mod quantum;
pub mod periodogram;
pub mod io;
pub mod scan;

pub use error::{Error, Result};
