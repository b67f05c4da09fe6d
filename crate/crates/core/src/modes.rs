//! Frequency-domain analysis: the coupling threshold eta_c, root-finding for
//! bound-mode frequencies omega0 in the zero regions of J, the residue
//! amplitude A, gapped-spectrum band edges, and the Ohmic closed forms.
//!
//! A bound mode solves, inside a zero region of J,
//!   Omega - omega0 = (1/2pi) P int J(omega)/(omega - omega0) d omega.
//! The left side falls with omega0 while the right side rises (its derivative
//! is the positive inverse-square moment), so the criterion residual is
//! strictly decreasing and bisection is guaranteed once a sign change is
//! bracketed.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::{FrequencyInterval, SpectralDensity};

const TWO_PI: f64 = std::f64::consts::TAU;

/// A real bound-mode solution (omega0, A). `boundary` marks the degenerate
/// threshold case eta = eta_c, where omega0 sits on a support edge and the
/// residue amplitude collapses to zero.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticMode {
    pub omega0: f64,
    pub amplitude: f64,
    #[serde(skip)]
    pub boundary: bool,
}

/// System-frequency window [Omega_1, Omega_2] admitting an in-gap bound mode;
/// either edge is infinite when J is discontinuous at the gap edge.
#[derive(Debug, Clone, Copy)]
pub struct GapBandEdges {
    pub omega_lower: f64,
    pub omega_upper: f64,
}

/// Threshold coupling eta_c = 2 pi Omega / int_0^inf (J0(omega)/omega) d omega
/// for half-side spectra. Returns 0 when the integral diverges (J0 finite at
/// omega = 0+) and +inf when J0 vanishes identically.
pub fn threshold_eta_c(j: &SpectralDensity, omega: f64) -> Result<f64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", "must be finite and > 0"));
    }
    if j.is_null() && j.with_eta(1.0)?.is_null() {
        return Ok(f64::INFINITY);
    }
    let j0 = j.with_eta(1.0)?;
    if !j0.is_half_side() {
        return Err(Error::NotHalfSide);
    }
    // A finite density limit at omega -> 0+ makes the integral diverge
    // logarithmically; the threshold collapses to zero.
    if j0.discontinuities().contains(&0.0) {
        return Ok(0.0);
    }
    // J0(omega)/omega is bounded at the origin for the remaining families
    // (J0 vanishes at least linearly there), so a plain quadrature applies:
    // the moment at omega0 = 0 is (1/2pi) int J0/omega.
    let m = j0.inverse_moment(0.0)?;
    if m <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(omega / m)
}

/// Residual of the bound-mode criterion, (Omega - omega0) - (1/2pi) P int
/// J/(omega - omega0) d omega. Requires J(omega0) = 0.
pub fn criterion_residual(j: &SpectralDensity, omega: f64, omega0: f64) -> Result<f64> {
    let d = j.density(omega0);
    if d != 0.0 {
        return Err(Error::DensityNotZero { omega0, density: d });
    }
    Ok(omega - omega0 - j.inverse_moment(omega0)?)
}

/// Residue amplitude A = (1 + (1/2pi) int J/(omega - omega0)^2)^{-1} of a
/// bound mode at omega0.
pub fn mode_amplitude(j: &SpectralDensity, omega0: f64) -> Result<f64> {
    Ok(1.0 / (1.0 + j.inverse_square_moment(omega0)?))
}

/// All real bound modes of the configuration, sorted by omega0.
///
/// Each zero region of J is scanned for a sign change of the criterion
/// residual and refined by bisection (to 1e-12) with a final secant polish.
/// For spectra symmetric about the resonance the partner root at
/// 2 Omega - omega0 is attached with the same amplitude.
pub fn find_modes(j: &SpectralDensity, omega: f64) -> Result<Vec<AsymptoticMode>> {
    if j.support().is_empty() {
        // Decoupled oscillator: u(t) = e^{-i Omega t} persists forever.
        return Ok(vec![AsymptoticMode {
            omega0: omega,
            amplitude: 1.0,
            boundary: false,
        }]);
    }

    let symmetric = j
        .symmetry_center()
        .is_some_and(|c| (c - omega).abs() <= 1e-12 * omega.abs().max(1.0));

    let mut modes = Vec::new();
    for region in j.zero_regions() {
        if symmetric && region.lo.is_finite() {
            // Upper partner of a symmetric pair; attached by reflection below.
            continue;
        }
        if let Some(mode) = scan_region(j, omega, region)? {
            if symmetric && !mode.boundary {
                modes.push(mode);
                modes.push(AsymptoticMode {
                    omega0: 2.0 * omega - mode.omega0,
                    amplitude: mode.amplitude,
                    boundary: false,
                });
            } else if symmetric {
                modes.push(mode);
                modes.push(AsymptoticMode {
                    omega0: 2.0 * omega - mode.omega0,
                    amplitude: mode.amplitude,
                    boundary: true,
                });
            } else {
                modes.push(mode);
            }
        }
    }
    modes.sort_by(|a, b| a.omega0.partial_cmp(&b.omega0).unwrap());
    Ok(modes)
}

/// Signed residual classification near a region edge.
enum EdgeSign {
    Positive(f64, f64),
    Negative(f64, f64),
    Boundary,
}

/// Probe the residual at a shrinking sequence of offsets from `edge` into the
/// region (`into` is +1 from a lower edge, -1 from an upper edge).
///
/// The residual is strictly decreasing across the region, so a root needs the
/// limit at the lower edge positive and at the upper edge negative. Near a
/// jump discontinuity of J the limit diverges, so probing keeps shrinking
/// until the sought sign appears or the offset floor is reached; the final
/// value then stands in for the edge limit.
fn probe_edge(
    j: &SpectralDensity,
    omega: f64,
    edge: f64,
    into: f64,
    btol: f64,
) -> Result<EdgeSign> {
    let want_positive = into > 0.0;
    let scale = edge.abs().max(1.0);
    let mut delta = 1e-3 * scale;
    let delta_min = 2e-9 * scale;
    let mut last = f64::NAN;
    while delta >= delta_min {
        let x = edge + into * delta;
        let g = criterion_residual(j, omega, x)?;
        if want_positive && g > btol {
            return Ok(EdgeSign::Positive(x, g));
        }
        if !want_positive && g < -btol {
            return Ok(EdgeSign::Negative(x, g));
        }
        last = g;
        delta *= 0.1;
    }
    let x = edge + into * delta_min * 10.0;
    if last.abs() <= btol {
        Ok(EdgeSign::Boundary)
    } else if last > 0.0 {
        Ok(EdgeSign::Positive(x, last))
    } else {
        Ok(EdgeSign::Negative(x, last))
    }
}

fn scan_region(
    j: &SpectralDensity,
    omega: f64,
    region: FrequencyInterval,
) -> Result<Option<AsymptoticMode>> {
    let btol = 1e-9 * omega.abs().max(1.0);
    let scale = omega
        .abs()
        .max(support_radius(j))
        .max(1.0);

    // Establish a bracket [lo, hi] with g(lo) > 0 > g(hi); the residual is
    // strictly decreasing in omega0 on the region.
    let (lo, glo, hi, ghi) = match (region.lo.is_finite(), region.hi.is_finite()) {
        (true, true) => {
            let a = match probe_edge(j, omega, region.lo, 1.0, btol)? {
                EdgeSign::Positive(x, g) => (x, g),
                EdgeSign::Negative(..) => return Ok(None),
                EdgeSign::Boundary => {
                    return Ok(Some(AsymptoticMode {
                        omega0: region.lo,
                        amplitude: 0.0,
                        boundary: true,
                    }))
                }
            };
            let b = match probe_edge(j, omega, region.hi, -1.0, btol)? {
                EdgeSign::Negative(x, g) => (x, g),
                EdgeSign::Positive(..) => return Ok(None),
                EdgeSign::Boundary => {
                    return Ok(Some(AsymptoticMode {
                        omega0: region.hi,
                        amplitude: 0.0,
                        boundary: true,
                    }))
                }
            };
            (a.0, a.1, b.0, b.1)
        }
        (false, true) => {
            // (-inf, edge): residual -> +inf far left; a root needs g < 0
            // approaching the edge.
            let b = match probe_edge(j, omega, region.hi, -1.0, btol)? {
                EdgeSign::Negative(x, g) => (x, g),
                EdgeSign::Positive(..) => return Ok(None),
                EdgeSign::Boundary => {
                    return Ok(Some(AsymptoticMode {
                        omega0: region.hi,
                        amplitude: 0.0,
                        boundary: true,
                    }))
                }
            };
            match expand_bracket(j, omega, region.hi, -1.0, scale, btol)? {
                Some((x, g)) => (x, g, b.0, b.1),
                None => return Ok(None),
            }
        }
        (true, false) => {
            // (edge, +inf): residual -> -inf far right; a root needs g > 0
            // approaching the edge.
            let a = match probe_edge(j, omega, region.lo, 1.0, btol)? {
                EdgeSign::Positive(x, g) => (x, g),
                EdgeSign::Negative(..) => return Ok(None),
                EdgeSign::Boundary => {
                    return Ok(Some(AsymptoticMode {
                        omega0: region.lo,
                        amplitude: 0.0,
                        boundary: true,
                    }))
                }
            };
            match expand_bracket(j, omega, region.lo, 1.0, scale, btol)? {
                Some((x, g)) => (a.0, a.1, x, g),
                None => return Ok(None),
            }
        }
        (false, false) => {
            // Whole-line zero region with a non-null density cannot occur;
            // support would have to be empty.
            unreachable!("whole-line zero region with nonempty support")
        }
    };

    let root = bisect(j, omega, lo, glo, hi, ghi)?;
    let amplitude = mode_amplitude(j, root)?;
    Ok(Some(AsymptoticMode {
        omega0: root,
        amplitude,
        boundary: false,
    }))
}

fn support_radius(j: &SpectralDensity) -> f64 {
    j.support()
        .iter()
        .flat_map(|p| [p.lo, p.hi])
        .filter(|v| v.is_finite())
        .fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Geometric expansion away from `edge` until the residual changes to the sign
/// expected far away, or the search radius exceeds 1e3 * scale (no root).
fn expand_bracket(
    j: &SpectralDensity,
    omega: f64,
    edge: f64,
    direction: f64,
    scale: f64,
    btol: f64,
) -> Result<Option<(f64, f64)>> {
    let mut step = scale;
    let want_positive = direction < 0.0;
    loop {
        let x = edge + direction * step;
        let g = criterion_residual(j, omega, x)?;
        if want_positive && g > btol {
            return Ok(Some((x, g)));
        }
        if !want_positive && g < -btol {
            return Ok(Some((x, g)));
        }
        step *= 2.0;
        if step > 1e3 * scale {
            return Ok(None);
        }
    }
}

/// Bisection to |Delta omega0| < 1e-12, then one secant polish.
fn bisect(
    j: &SpectralDensity,
    omega: f64,
    mut lo: f64,
    mut glo: f64,
    mut hi: f64,
    mut ghi: f64,
) -> Result<f64> {
    debug_assert!(glo > 0.0 && ghi < 0.0);
    let tol = 1e-12;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = criterion_residual(j, omega, mid)?;
        if g > 0.0 {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
            ghi = g;
        }
    }
    let denom = glo - ghi;
    if denom > 0.0 {
        let x = lo + glo * (hi - lo) / denom;
        if x > lo && x < hi {
            return Ok(x);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// System-frequency band [Omega_1, Omega_2] for which a gapped spectrum admits
/// an in-gap bound mode:
///   Omega_i = omega_i - (1/2pi) int_{-inf}^{omega_1} J/(omega_i - omega)
///           + (1/2pi) int_{omega_2}^{inf} J/(omega - omega_i).
/// A jump of J at a gap edge makes the adjacent integral diverge and the
/// corresponding band edge infinite.
pub fn gap_band_edges(j: &SpectralDensity, gap: FrequencyInterval) -> Result<GapBandEdges> {
    if !gap.is_finite() {
        return Err(Error::NotZeroRegion {
            lo: gap.lo,
            hi: gap.hi,
        });
    }
    let tol = 1e-12 * gap.lo.abs().max(gap.hi.abs()).max(1.0);
    let inside_zero = j
        .zero_regions()
        .iter()
        .any(|z| z.lo <= gap.lo + tol && gap.hi - tol <= z.hi);
    if !inside_zero {
        return Err(Error::NotZeroRegion {
            lo: gap.lo,
            hi: gap.hi,
        });
    }

    let jumps = j.discontinuities();
    let jump_at = |x: f64| jumps.iter().any(|&d| (d - x).abs() <= tol);

    let edge = |omega_i: f64| -> Result<f64> {
        let lower =
            j.integral_over_clipped(f64::NEG_INFINITY, gap.lo, |w| 1.0 / (omega_i - w))? / TWO_PI;
        let upper =
            j.integral_over_clipped(gap.hi, f64::INFINITY, |w| 1.0 / (w - omega_i))? / TWO_PI;
        Ok(omega_i - lower + upper)
    };

    let omega_lower = if jump_at(gap.lo) {
        f64::NEG_INFINITY
    } else {
        edge(gap.lo)?
    };
    let omega_upper = if jump_at(gap.hi) {
        f64::INFINITY
    } else {
        edge(gap.hi)?
    };
    Ok(GapBandEdges {
        omega_lower,
        omega_upper,
    })
}

/// Bound mode of the Ohmic spectrum from its closed-form criterion
///   Omega - omega0 = eta Omega_c [1 - x e^x E1(x)],  x = -omega0/Omega_c,
/// solved by bisection on the exponential-integral form, with the closed-form
/// amplitude A = ((Omega - eta Omega_c)/omega0 - (Omega - omega0)/Omega_c)^{-1}.
/// Returns `None` below threshold (eta < Omega/Omega_c).
pub fn ohmic_mode_closed_form(
    eta: f64,
    omega: f64,
    omega_c: f64,
) -> Result<Option<AsymptoticMode>> {
    for (name, v) in [("eta", eta), ("omega", omega), ("omega_c", omega_c)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::param(name, "must be finite and > 0"));
        }
    }
    let eta_c = omega / omega_c;
    if eta < eta_c {
        return Ok(None);
    }
    if eta == eta_c {
        return Ok(Some(AsymptoticMode {
            omega0: 0.0,
            amplitude: 0.0,
            boundary: true,
        }));
    }

    // g(x) = (Omega + x Omega_c) - eta Omega_c [1 - x e^x E1(x)], decreasing
    // root in x = -omega0/Omega_c > 0; g(0) = Omega - eta Omega_c < 0 and
    // g -> +inf. (Increasing in x: d/dx lhs = Omega_c > 0.)
    let g = |x: f64| omega + x * omega_c - eta * omega_c * (1.0 - x * x.exp() * expint_e1(x));
    let mut lo = 0.0;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::DivergentIntegral {
                reason: "Ohmic closed-form bracket expansion failed".into(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let omega0 = -x * omega_c;
    let amplitude = 1.0 / ((omega - eta * omega_c) / omega0 - (omega - omega0) / omega_c);
    Ok(Some(AsymptoticMode {
        omega0,
        amplitude,
        boundary: false,
    }))
}

/// Exponential integral E1(x) for x > 0: series for small x, continued
/// fraction (modified Lentz) for large x.
pub(crate) fn expint_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..=40 {
            term *= -x / k as f64;
            let contrib = -term / k as f64;
            sum += contrib;
            if contrib.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E1(x) = e^{-x} / (x + 1/(1 + 1/(x + 2/(1 + 2/(x + ...)))))
        let mut b = x + 1.0;
        let tiny = 1e-300;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=120 {
            let a = -(i as f64) * (i as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Thermal,
    NonThermal,
    Boundary,
}

/// Stabilization regime implied by a mode list.
pub fn classify_regime(modes: &[AsymptoticMode]) -> Regime {
    if modes.is_empty() {
        Regime::Thermal
    } else if modes.iter().any(|m| m.boundary) {
        Regime::Boundary
    } else {
        Regime::NonThermal
    }
}
