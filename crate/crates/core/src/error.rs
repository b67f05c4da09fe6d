//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {field}: {constraint}")]
    InvalidParam { field: String, constraint: String },

    #[error("quadrature did not converge within the refinement limit (residual estimate {residual:.3e})")]
    QuadratureNoConvergence { residual: f64 },

    #[error("integrand is not finite near omega = {omega:.6e}")]
    NonFiniteIntegrand { omega: f64 },

    #[error("integral diverges: {reason}")]
    DivergentIntegral { reason: String },

    #[error("principal value is ambiguous at omega0 = {omega0:.6e}: spectral density has a jump discontinuity there")]
    PvAtDiscontinuity { omega0: f64 },

    #[error("spectral density is not half-side (support extends below zero); use gap_band_edges for gapped spectra")]
    NotHalfSide,

    #[error("criterion requires J(omega0) = 0 but J({omega0:.6e}) = {density:.6e}")]
    DensityNotZero { omega0: f64, density: f64 },

    #[error("interval ({lo}, {hi}) is not a zero region of the spectral density")]
    NotZeroRegion { lo: f64, hi: f64 },

    #[error("solver unstable at t = {t:.6e}: |u| = {abs_u:.6e} exceeds 1.01; decrease dt")]
    UnstableSolve { t: f64, abs_u: f64 },

    #[error("trailing window too short: {detail}")]
    WindowTooShort { detail: String },

    #[error("time grids do not match: {detail}")]
    GridMismatch { detail: String },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:.3e}")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    JacobiNoConvergence { sweeps: usize },

    #[error("discretization window misses {missing:.3e} of the spectral weight (more than 0.1%)")]
    CoverageTooLow { missing: f64 },

    #[error("bath frequencies are not uniformly spaced (spread {spread:.3e})")]
    NonUniformSpacing { spread: f64 },

    #[error("Bose-Einstein weight requires omega > 0 (got {omega:.6e})")]
    NonPositiveFrequency { omega: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn param(field: &str, constraint: impl Into<String>) -> Self {
        Error::InvalidParam {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }
}
