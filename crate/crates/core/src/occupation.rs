//! Thermal side of the reduced dynamics: Bose-Einstein weights, the
//! Wigner-Weisskopf parameters (Omega', gamma), the weak- and strong-coupling
//! bath distribution functions p(omega), the mean occupation number n(t), and
//! the perturbative center-shift / broadening corrections.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::modes::AsymptoticMode;
use crate::oracle::BathDiscretization;
use crate::spectra::SpectralDensity;
use crate::volterra::ComplexTrajectory;



/// Inverse temperature beta = 1/(k_B T); beta = +inf means T = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    beta: f64,
}

impl ThermalState {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 {
            return Err(Error::param("beta", "must be > 0 (or +inf for T = 0)"));
        }
        Ok(ThermalState { beta })
    }

    pub fn zero_temperature() -> Self {
        ThermalState { beta: f64::INFINITY }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Renormalized frequency Omega' and decay rate gamma = J(Omega)/2 of the
/// weak-coupling pole approximation.
#[derive(Debug, Clone, Copy)]
pub struct WignerWeisskopfParams {
    pub omega_prime: f64,
    pub gamma: f64,
}

/// Initial system occupation <a^dag a>_S.
#[derive(Debug, Clone, Copy)]
pub struct InitialOccupation {
    pub n_system: f64,
}

impl InitialOccupation {
    pub fn new(n_system: f64) -> Result<Self> {
        if !(n_system.is_finite() && n_system >= 0.0) {
            return Err(Error::param("n_system", "must be finite and >= 0"));
        }
        Ok(InitialOccupation { n_system })
    }
}

/// Bose-Einstein occupation f_beta(omega) = 1/(e^{beta omega} - 1), omega > 0.
pub fn bose_einstein(state: &ThermalState, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveFrequency { omega });
    }
    if state.beta.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 / (state.beta * omega).exp_m1())
}

fn bose_prime(beta: f64, omega: f64) -> f64 {
    let e = (beta * omega).exp();
    let d = e - 1.0;
    -beta * e / (d * d)
}

fn bose_double_prime(beta: f64, omega: f64) -> f64 {
    let e = (beta * omega).exp();
    let d = e - 1.0;
    beta * beta * e * (e + 1.0) / (d * d * d)
}

/// Omega' = Omega - (1/2pi) P int J(omega')/(omega' - Omega) d omega' and
/// gamma = J(Omega)/2.
pub fn wigner_weisskopf_params(j: &SpectralDensity, omega: f64) -> Result<WignerWeisskopfParams> {
    Ok(WignerWeisskopfParams {
        omega_prime: omega - j.inverse_moment(omega)?,
        gamma: 0.5 * j.density(omega),
    })
}

/// Weak-coupling Lorentzian distribution
/// p(omega) = (1/2pi) * 2 gamma / ((omega - Omega')^2 + gamma^2).
///
/// gamma = 0 is the delta-function limit; callers should use f_beta(Omega')
/// directly there.
pub fn p_weak(ww: &WignerWeisskopfParams, omega: f64) -> Result<f64> {
    if ww.gamma <= 0.0 {
        return Err(Error::param(
            "gamma",
            "must be > 0 (the gamma -> 0 limit is a delta at Omega'; use f_beta(Omega'))",
        ));
    }
    let d = omega - ww.omega_prime;
    Ok(ww.gamma / (std::f64::consts::PI * (d * d + ww.gamma * ww.gamma)))
}

/// Strong-coupling distribution p(omega) = (A^2/2pi) * 2 J(omega)/(omega - omega0)^2.
pub fn p_strong(j: &SpectralDensity, mode: &AsymptoticMode, omega: f64) -> f64 {
    let d = omega - mode.omega0;
    if d == 0.0 {
        return 0.0; // J vanishes at omega0; the removable limit is irrelevant here
    }
    mode.amplitude * mode.amplitude * j.density(omega) / (std::f64::consts::PI * d * d)
}

/// int p_strong d omega over the support; equals 2A(1 - A) when (omega0, A)
/// satisfy the bound-mode relations.
pub fn p_strong_integral(j: &SpectralDensity, mode: &AsymptoticMode) -> Result<f64> {
    let a2 = mode.amplitude * mode.amplitude;
    Ok(2.0 * a2 * j.inverse_square_moment(mode.omega0)?)
}

/// One row of the occupation series.
#[derive(Debug, Clone, Copy)]
pub struct OccupationSample {
    pub t: f64,
    pub n_total: f64,
    pub n_initial_part: f64,
    pub n_bath_part: f64,
}

fn check_bath_frequencies(bath: &BathDiscretization) -> Result<()> {
    for &w in bath.omegas() {
        if w <= 0.0 {
            return Err(Error::NonPositiveFrequency { omega: w });
        }
    }
    Ok(())
}

/// Bath part sum_l |u_l(t_k)|^2 f_beta(omega_l) accumulated over the whole
/// grid. Modes are processed in fixed blocks in parallel and reduced in block
/// order, so the result is bitwise deterministic.
fn bath_part_series(
    u: &ComplexTrajectory,
    bath: &BathDiscretization,
    state: &ThermalState,
) -> Result<Vec<f64>> {
    check_bath_frequencies(bath)?;
    let n = u.len();
    let grid = u.grid();
    let dt = grid.dt();
    let us = u.samples();

    let modes: Vec<(f64, f64)> = bath
        .omegas()
        .iter()
        .zip(bath.couplings())
        .map(|(&w, &g)| (w, g))
        .collect();

    let weights: Result<Vec<f64>> = modes
        .iter()
        .map(|&(w, _)| bose_einstein(state, w))
        .collect();
    let weights = weights?;
    if state.beta.is_infinite() {
        return Ok(vec![0.0; n]);
    }

    const BLOCK: usize = 64;
    let blocks: Vec<Vec<f64>> = modes
        .par_chunks(BLOCK)
        .zip(weights.par_chunks(BLOCK))
        .map(|(chunk, wchunk)| {
            let mut acc = vec![0.0; n];
            for (&(omega_l, eta_l), &fw) in chunk.iter().zip(wchunk) {
                if eta_l == 0.0 || fw == 0.0 {
                    continue;
                }
                // |u_l(t)|^2 = eta_l^2 |T(t)|^2 with T the running trapezoid
                // of u(s) e^{i omega_l s}.
                let scale = eta_l * eta_l * fw;
                let mut t_acc = Complex64::new(0.0, 0.0);
                let mut prev = us[0];
                for k in 1..n {
                    let t = k as f64 * dt;
                    let cur = us[k] * Complex64::from_polar(1.0, omega_l * t);
                    t_acc += 0.5 * dt * (prev + cur);
                    prev = cur;
                    acc[k] += scale * t_acc.norm_sqr();
                }
            }
            acc
        })
        .collect();

    let mut out = vec![0.0; n];
    for b in blocks {
        for (o, v) in out.iter_mut().zip(b) {
            *o += v;
        }
    }
    Ok(out)
}

/// Full mean-occupation series n(t) = |u|^2 n_S + sum_l |u_l|^2 f_beta(omega_l).
pub fn occupation_series(
    u: &ComplexTrajectory,
    bath: &BathDiscretization,
    init: &InitialOccupation,
    state: &ThermalState,
) -> Result<Vec<OccupationSample>> {
    let bath_part = bath_part_series(u, bath, state)?;
    Ok(u.samples()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let n_initial = s.norm_sqr() * init.n_system;
            OccupationSample {
                t: u.grid().time(k),
                n_total: n_initial + bath_part[k],
                n_initial_part: n_initial,
                n_bath_part: bath_part[k],
            }
        })
        .collect())
}

/// Mean occupation number at one grid index.
pub fn occupation_number(
    u: &ComplexTrajectory,
    bath: &BathDiscretization,
    init: &InitialOccupation,
    state: &ThermalState,
    t_index: usize,
) -> Result<f64> {
    if t_index >= u.len() {
        return Err(Error::GridMismatch {
            detail: format!("t_index {t_index} outside grid of {} points", u.len()),
        });
    }
    let series = occupation_series(u, bath, init, state)?;
    Ok(series[t_index].n_total)
}

/// Perturbative corrections to the thermalized occupation.
#[derive(Debug, Clone, Copy)]
pub struct PerturbativeShifts {
    /// Center-translation correction (1/2pi) f'_beta(Omega) P int J/(Omega - omega).
    pub delta_n_center: f64,
    /// Broadening correction (1/2) f''_beta(Omega) <(Delta omega)^2> with
    /// <(Delta omega)^2> taken as gamma^2.
    pub delta_n_broaden: f64,
}

pub fn perturbative_shifts(
    j: &SpectralDensity,
    omega: f64,
    state: &ThermalState,
) -> Result<PerturbativeShifts> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::param("omega", "must be finite and > 0"));
    }
    if state.beta.is_infinite() {
        return Err(Error::param("beta", "perturbative shifts need finite beta"));
    }
    // P int J/(Omega - omega) d omega = -2 pi inverse_moment(J, Omega)
    let delta_n_center = -bose_prime(state.beta, omega) * j.inverse_moment(omega)?;
    let gamma = 0.5 * j.density(omega);
    let delta_n_broaden = 0.5 * bose_double_prime(state.beta, omega) * gamma * gamma;
    Ok(PerturbativeShifts {
        delta_n_center,
        delta_n_broaden,
    })
}

/// Two-era closed-form model of a bath amplitude: exponential decay with
/// (Omega', gamma) up to the changeover t1, then the bound-mode era with
/// (omega0, A). `mode = None` sets A = 0. Diagnostic only; not on the main
/// computation path.
pub fn ul_piecewise_approx(
    eta_l: f64,
    omega_l: f64,
    ww: &WignerWeisskopfParams,
    mode: Option<&AsymptoticMode>,
    t1: f64,
    t: f64,
) -> Result<Complex64> {
    if t < t1 || t1 < 0.0 {
        return Err(Error::param("t", "requires t >= t1 >= 0"));
    }
    let i = Complex64::new(0.0, 1.0);
    let carrier = Complex64::from_polar(1.0, -omega_l * t);

    // Decaying era: integral of e^{-i(Omega'-w_l)s - gamma s} over [0, t1].
    let d1 = -i * (ww.omega_prime - omega_l) - ww.gamma;
    let num1 = (d1 * t1).exp() - 1.0;
    let term1 = if d1.norm() < 1e-14 {
        Complex64::new(t1, 0.0)
    } else {
        num1 / d1
    };

    // Asymptotic era: A integral of e^{-i(omega0-w_l)s} over [t1, t].
    let term2 = match mode {
        None => Complex64::new(0.0, 0.0),
        Some(m) => {
            let x = m.omega0 - omega_l;
            let phase = |s: f64| Complex64::from_polar(1.0, -x * s);
            let frac = if (x * (t - t1)).abs() < 1e-9 {
                // (e^{-ixt} - e^{-ixt1})/(-ix) -> (t - t1) e^{-ix(t+t1)/2}
                Complex64::from_polar(t - t1, -x * 0.5 * (t + t1))
            } else {
                (phase(t) - phase(t1)) / (-i * x)
            };
            m.amplitude * frac
        }
    };

    Ok(-i * eta_l * carrier * (term1 + term2))
}
