//! Reduced dynamics of a harmonic oscillator linearly coupled to a bosonic
//! bath: spectral densities and their weighted moments, a time-domain solver
//! for the survival amplitude, bound-mode analysis (coupling threshold, mode
//! frequency and residue amplitude), thermal occupation, and a finite-bath
//! exact-diagonalization oracle.

// Frozen oracle constants keep guard digits; `!(x > 0)` deliberately
// rejects NaN alongside the out-of-range values.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod io;
pub mod modes;
pub mod occupation;
pub mod oracle;
pub mod quad;
pub mod spectra;
pub mod volterra;

pub use error::{Error, Result};
pub use spectra::{FrequencyInterval, SpectralDensity};
