//! Spectral-density families J(omega), their supports and zero regions, the
//! memory kernel G(t), and the weighted frequency integrals (plain and
//! principal-value) consumed by the frequency- and time-domain analyses.
//!
//! Every family factors as J = eta * J0 with eta >= 0. Densities are immutable
//! after construction; all operations are pure.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Envelope ratio at which semi-infinite tails are truncated for quadrature.
/// ln(1e14) so the discarded tail is ~1e-14 of the peak.
const TAIL_LOG: f64 = 32.236_191_301_916_64;

/// Absolute tolerance for the adaptive quadratures backing kernel and moments.
const QUAD_ABS_TOL: f64 = 1e-11;
const QUAD_REL_TOL: f64 = 1e-12;
const QUAD_MAX_PANELS: usize = 20_000;

/// A closed/open frequency interval; either endpoint may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FrequencyInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::param("interval", format!("lo < hi required (got {lo}, {hi})")));
        }
        Ok(FrequencyInterval { lo, hi })
    }

    pub fn contains(&self, omega: f64) -> bool {
        self.lo <= omega && omega <= self.hi
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

#[derive(Debug, Clone)]
enum Family {
    Ohmic {
        omega_c: f64,
    },
    Triangle {
        omega: f64,
    },
    Square {
        omega: f64,
    },
    GappedExponential {
        eta1: f64,
        eta2: f64,
        gamma1: f64,
        gamma2: f64,
        omega1: f64,
        omega2: f64,
    },
    Lorentzian {
        center: f64,
        half_width: f64,
    },
    Tabulated {
        samples: Vec<(f64, f64)>,
    },
}

/// A system-bath interaction spectral density J(omega) = eta * J0(omega).
#[derive(Debug, Clone)]
pub struct SpectralDensity {
    eta: f64,
    family: Family,
}

fn require_finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, "must be finite"))
    }
}

fn require_positive(field: &str, v: f64) -> Result<()> {
    require_finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be > 0 (got {v})")))
    }
}

impl SpectralDensity {
    pub fn ohmic(eta: f64, omega_c: f64) -> Result<Self> {
        Self::check_eta(eta)?;
        require_positive("omega_c", omega_c)?;
        Ok(SpectralDensity {
            eta,
            family: Family::Ohmic { omega_c },
        })
    }

    pub fn triangle(eta: f64, omega: f64) -> Result<Self> {
        Self::check_eta(eta)?;
        require_positive("omega", omega)?;
        Ok(SpectralDensity {
            eta,
            family: Family::Triangle { omega },
        })
    }

    pub fn square(eta: f64, omega: f64) -> Result<Self> {
        Self::check_eta(eta)?;
        require_positive("omega", omega)?;
        Ok(SpectralDensity {
            eta,
            family: Family::Square { omega },
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn gapped_exponential(
        eta: f64,
        eta1: f64,
        eta2: f64,
        gamma1: f64,
        gamma2: f64,
        omega1: f64,
        omega2: f64,
    ) -> Result<Self> {
        Self::check_eta(eta)?;
        for (name, v) in [("eta1", eta1), ("eta2", eta2)] {
            require_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::param(name, format!("must be >= 0 (got {v})")));
            }
        }
        require_positive("gamma1", gamma1)?;
        require_positive("gamma2", gamma2)?;
        require_finite("omega1", omega1)?;
        require_finite("omega2", omega2)?;
        if !(omega1 < omega2) {
            return Err(Error::param("omega1", "omega1 < omega2 required"));
        }
        Ok(SpectralDensity {
            eta,
            family: Family::GappedExponential {
                eta1,
                eta2,
                gamma1,
                gamma2,
                omega1,
                omega2,
            },
        })
    }

    pub fn lorentzian(eta: f64, center: f64, half_width: f64) -> Result<Self> {
        Self::check_eta(eta)?;
        require_finite("center", center)?;
        require_positive("half_width", half_width)?;
        Ok(SpectralDensity {
            eta,
            family: Family::Lorentzian { center, half_width },
        })
    }

    /// Build a tabulated density from (omega, J0) pairs sorted by strictly
    /// increasing omega. Linear interpolation inside the hull, zero outside.
    pub fn tabulated(eta: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        Self::check_eta(eta)?;
        if samples.len() < 2 {
            return Err(Error::param("samples", "at least two samples required"));
        }
        for (i, &(w, j)) in samples.iter().enumerate() {
            require_finite(&format!("samples[{i}].omega"), w)?;
            require_finite(&format!("samples[{i}].j"), j)?;
            if j < 0.0 {
                return Err(Error::param(&format!("samples[{i}].j"), "must be >= 0"));
            }
            if i > 0 && !(samples[i - 1].0 < w) {
                return Err(Error::param(
                    &format!("samples[{i}].omega"),
                    "omega values must be strictly increasing",
                ));
            }
        }
        Ok(SpectralDensity {
            eta,
            family: Family::Tabulated { samples },
        })
    }

    fn check_eta(eta: f64) -> Result<()> {
        require_finite("eta", eta)?;
        if eta < 0.0 {
            return Err(Error::param("eta", format!("must be >= 0 (got {eta})")));
        }
        Ok(())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Same spectral shape with a different overall coupling strength.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::check_eta(eta)?;
        Ok(SpectralDensity {
            eta,
            family: self.family.clone(),
        })
    }

    /// True when the density is identically zero regardless of eta.
    fn shape_is_null(&self) -> bool {
        match &self.family {
            Family::GappedExponential { eta1, eta2, .. } => *eta1 == 0.0 && *eta2 == 0.0,
            Family::Tabulated { samples } => samples.iter().all(|&(_, j)| j == 0.0),
            _ => false,
        }
    }

    /// True when J is identically zero.
    pub fn is_null(&self) -> bool {
        self.eta == 0.0 || self.shape_is_null()
    }

    /// Evaluate J(omega). Total function, >= 0 everywhere.
    pub fn density(&self, omega: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        self.eta * self.density0(omega)
    }

    /// J0(omega), the shape with unit coupling.
    fn density0(&self, omega: f64) -> f64 {
        match &self.family {
            Family::Ohmic { omega_c } => {
                if omega <= 0.0 {
                    0.0
                } else {
                    TWO_PI * omega * (-omega / omega_c).exp()
                }
            }
            Family::Triangle { omega: om } => {
                if omega <= 0.0 || omega >= 2.0 * om {
                    0.0
                } else if omega <= *om {
                    TWO_PI * omega / om
                } else {
                    TWO_PI * (2.0 * om - omega) / om
                }
            }
            Family::Square { omega: om } => {
                if omega > 0.0 && omega < 2.0 * om {
                    TWO_PI
                } else {
                    0.0
                }
            }
            Family::GappedExponential {
                eta1,
                eta2,
                gamma1,
                gamma2,
                omega1,
                omega2,
            } => {
                if omega < *omega1 {
                    eta1 * (gamma1 * omega).exp()
                } else if omega > *omega2 {
                    eta2 * (-gamma2 * omega).exp()
                } else {
                    0.0
                }
            }
            Family::Lorentzian { center, half_width } => {
                let d = omega - center;
                half_width * half_width / (d * d + half_width * half_width)
            }
            Family::Tabulated { samples } => {
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if omega < first.0 || omega > last.0 {
                    return 0.0;
                }
                let idx = samples.partition_point(|&(w, _)| w <= omega);
                if idx == 0 {
                    return first.1;
                }
                if idx == samples.len() {
                    return last.1;
                }
                let (w0, j0) = samples[idx - 1];
                let (w1, j1) = samples[idx];
                j0 + (j1 - j0) * (omega - w0) / (w1 - w0)
            }
        }
    }

    /// Closure of { omega : J(omega) > 0 }, as disjoint ascending intervals.
    pub fn support(&self) -> Vec<FrequencyInterval> {
        if self.is_null() {
            return Vec::new();
        }
        match &self.family {
            Family::Ohmic { .. } => vec![FrequencyInterval {
                lo: 0.0,
                hi: f64::INFINITY,
            }],
            Family::Triangle { omega } | Family::Square { omega } => vec![FrequencyInterval {
                lo: 0.0,
                hi: 2.0 * omega,
            }],
            Family::GappedExponential {
                eta1,
                eta2,
                omega1,
                omega2,
                ..
            } => {
                let mut v = Vec::new();
                if *eta1 > 0.0 {
                    v.push(FrequencyInterval {
                        lo: f64::NEG_INFINITY,
                        hi: *omega1,
                    });
                }
                if *eta2 > 0.0 {
                    v.push(FrequencyInterval {
                        lo: *omega2,
                        hi: f64::INFINITY,
                    });
                }
                v
            }
            Family::Lorentzian { .. } => vec![FrequencyInterval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }],
            Family::Tabulated { samples } => {
                // A cell [w_i, w_{i+1}] carries positive density unless both
                // endpoint samples vanish.
                let mut runs: Vec<FrequencyInterval> = Vec::new();
                for i in 0..samples.len() - 1 {
                    let (w0, j0) = samples[i];
                    let (w1, j1) = samples[i + 1];
                    if j0 > 0.0 || j1 > 0.0 {
                        match runs.last_mut() {
                            Some(last) if last.hi == w0 => last.hi = w1,
                            _ => runs.push(FrequencyInterval { lo: w0, hi: w1 }),
                        }
                    }
                }
                runs
            }
        }
    }

    /// Maximal open intervals on which J vanishes identically, including
    /// unbounded tails. Complementary to `support`.
    pub fn zero_regions(&self) -> Vec<FrequencyInterval> {
        if self.is_null() {
            return vec![FrequencyInterval {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
            }];
        }
        let sup = self.support();
        let mut regions = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for piece in &sup {
            if piece.lo > cursor {
                regions.push(FrequencyInterval {
                    lo: cursor,
                    hi: piece.lo,
                });
            }
            cursor = piece.hi;
        }
        if cursor < f64::INFINITY {
            regions.push(FrequencyInterval {
                lo: cursor,
                hi: f64::INFINITY,
            });
        }
        regions
    }

    /// Frequencies where J jumps by a finite amount (PV prescriptions are
    /// ambiguous there).
    pub(crate) fn discontinuities(&self) -> Vec<f64> {
        if self.is_null() {
            return Vec::new();
        }
        match &self.family {
            Family::Square { omega } => vec![0.0, 2.0 * omega],
            Family::GappedExponential {
                eta1,
                eta2,
                omega1,
                omega2,
                ..
            } => {
                let mut v = Vec::new();
                if *eta1 > 0.0 {
                    v.push(*omega1);
                }
                if *eta2 > 0.0 {
                    v.push(*omega2);
                }
                v
            }
            Family::Tabulated { samples } => {
                let mut v = Vec::new();
                if samples[0].1 > 0.0 {
                    v.push(samples[0].0);
                }
                if samples[samples.len() - 1].1 > 0.0 {
                    v.push(samples[samples.len() - 1].0);
                }
                v
            }
            _ => Vec::new(),
        }
    }

    /// Support truncated to finite panels with breakpoints at kinks, ready for
    /// adaptive quadrature. Each inner list is one contiguous support chunk.
    fn segments(&self) -> Vec<Vec<f64>> {
        if self.is_null() {
            return Vec::new();
        }
        match &self.family {
            Family::Ohmic { omega_c } => {
                vec![vec![0.0, *omega_c, 40.0 * omega_c]]
            }
            Family::Triangle { omega } => vec![vec![0.0, *omega, 2.0 * omega]],
            Family::Square { omega } => vec![vec![0.0, *omega, 2.0 * omega]],
            Family::GappedExponential {
                eta1,
                eta2,
                gamma1,
                gamma2,
                omega1,
                omega2,
                ..
            } => {
                let mut v = Vec::new();
                if *eta1 > 0.0 {
                    v.push(vec![omega1 - TAIL_LOG / gamma1, *omega1]);
                }
                if *eta2 > 0.0 {
                    v.push(vec![*omega2, omega2 + TAIL_LOG / gamma2]);
                }
                v
            }
            Family::Lorentzian { center, half_width } => {
                // Only used for coverage checks; moments and kernels use the
                // closed forms because the quadratic tails defeat truncation.
                vec![vec![center - 1e7 * half_width, *center, center + 1e7 * half_width]]
            }
            Family::Tabulated { samples } => {
                let mut chunks: Vec<Vec<f64>> = Vec::new();
                for i in 0..samples.len() - 1 {
                    let (w0, j0) = samples[i];
                    let (w1, j1) = samples[i + 1];
                    if j0 > 0.0 || j1 > 0.0 {
                        match chunks.last_mut() {
                            Some(last) if *last.last().unwrap() == w0 => last.push(w1),
                            _ => chunks.push(vec![w0, w1]),
                        }
                    }
                }
                chunks
            }
        }
    }

    /// Memory kernel G(t) = (1/2pi) int J(omega) e^{-i omega t} d omega.
    ///
    /// Closed forms for Ohmic, Square and Lorentzian; adaptive quadrature over
    /// the (truncated) support otherwise.
    pub fn kernel(&self, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return Err(Error::param("t", "must be finite"));
        }
        if self.is_null() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match &self.family {
            Family::Ohmic { omega_c } => {
                let denom = Complex64::new(1.0, omega_c * t);
                Ok(Complex64::new(self.eta * omega_c * omega_c, 0.0) / (denom * denom))
            }
            Family::Square { omega } => {
                // eta * int_0^{2 Omega} e^{-i w t} dw = 2 eta Omega e^{-i Omega t} sinc(Omega t)
                let phase = Complex64::from_polar(1.0, -omega * t);
                Ok(phase * (2.0 * self.eta * omega * sinc(omega * t)))
            }
            Family::Lorentzian { center, half_width } => {
                let mag = 0.5 * self.eta * half_width * (-half_width * t.abs()).exp();
                Ok(Complex64::from_polar(1.0, -center * t) * mag)
            }
            _ => {
                let out = quad::integrate(
                    |w| Complex64::from_polar(self.density(w), -w * t),
                    &self.flat_breaks(),
                    QUAD_ABS_TOL,
                    QUAD_REL_TOL,
                    QUAD_MAX_PANELS,
                )?;
                Ok(out.value / TWO_PI)
            }
        }
    }

    fn flat_breaks(&self) -> Vec<f64> {
        // Segments are disjoint and ascending; joining them through the gap is
        // harmless for pole-free integrands because the density vanishes there.
        let mut breaks = Vec::new();
        for chunk in self.segments() {
            for b in chunk {
                if breaks.last() != Some(&b) {
                    breaks.push(b);
                }
            }
        }
        breaks
    }

    /// Sum of adaptive quadratures of `f` over each contiguous support chunk.
    /// Never integrates across zero regions, so integrands may have poles there.
    fn quad_over_support(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for chunk in self.segments() {
            let out = quad::integrate(&f, &chunk, QUAD_ABS_TOL, QUAD_REL_TOL, QUAD_MAX_PANELS)?;
            total += out.value;
        }
        Ok(total)
    }

    /// (1/2pi) int J(omega) d omega, equal to kernel(t = 0). Closed form for
    /// the analytic families, exact trapezoid for tabulated data.
    pub fn total_weight(&self) -> f64 {
        if self.is_null() {
            return 0.0;
        }
        match &self.family {
            Family::Ohmic { omega_c } => self.eta * omega_c * omega_c,
            Family::Triangle { omega } => self.eta * omega,
            Family::Square { omega } => 2.0 * self.eta * omega,
            Family::GappedExponential {
                eta1,
                eta2,
                gamma1,
                gamma2,
                omega1,
                omega2,
            } => {
                self.eta * (eta1 * (gamma1 * omega1).exp() / gamma1
                    + eta2 * (-gamma2 * omega2).exp() / gamma2)
                    / TWO_PI
            }
            Family::Lorentzian { half_width, .. } => 0.5 * self.eta * half_width,
            Family::Tabulated { samples } => {
                let mut area = 0.0;
                for w in samples.windows(2) {
                    area += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
                }
                self.eta * area / TWO_PI
            }
        }
    }

    /// Spectral weight inside [lo, hi]: (1/2pi) int_lo^hi J d omega.
    pub(crate) fn weight_in(&self, lo: f64, hi: f64) -> Result<f64> {
        Ok(self.integral_over_clipped(lo, hi, |_| 1.0)? / TWO_PI)
    }

    /// int over support ^ [lo, hi] of J(omega) f(omega) d omega (plain, no
    /// 1/2pi), chunk by chunk over the truncated support.
    pub(crate) fn integral_over_clipped(
        &self,
        lo: f64,
        hi: f64,
        f: impl Fn(f64) -> f64,
    ) -> Result<f64> {
        if self.is_null() {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for chunk in self.segments() {
            let a = chunk[0].max(lo);
            let b = chunk.last().unwrap().min(hi);
            if a >= b {
                continue;
            }
            let mut breaks = vec![a];
            for k in &chunk {
                if *k > a && *k < b {
                    breaks.push(*k);
                }
            }
            breaks.push(b);
            let out = quad::integrate(
                |w| self.density(w) * f(w),
                &breaks,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
                QUAD_MAX_PANELS,
            )?;
            total += out.value;
        }
        Ok(total)
    }

    /// Distance from omega0 to the closed support (0 when inside).
    fn support_distance(&self, omega0: f64) -> f64 {
        let mut best = f64::INFINITY;
        for piece in self.support() {
            if piece.contains(omega0) {
                return 0.0;
            }
            let d = if omega0 < piece.lo {
                piece.lo - omega0
            } else {
                omega0 - piece.hi
            };
            best = best.min(d);
        }
        best
    }

    fn is_jump_point(&self, omega0: f64) -> bool {
        self.discontinuities()
            .iter()
            .any(|&d| (omega0 - d).abs() <= 1e-12 * d.abs().max(1.0))
    }

    /// (1/2pi) P int J(omega) / (omega - omega0) d omega.
    ///
    /// Regular adaptive quadrature when omega0 lies outside the closed support;
    /// symmetric-window singularity subtraction when it lies inside. Errors at
    /// jump discontinuities of J, where the principal value is ambiguous.
    pub fn inverse_moment(&self, omega0: f64) -> Result<f64> {
        require_finite("omega0", omega0)?;
        if self.is_null() {
            return Ok(0.0);
        }
        if let Family::Lorentzian { center, half_width } = &self.family {
            // P int dw / ((w-c)^2 + g^2) / (w - w0) = pi (c - w0) / (g ((c-w0)^2 + g^2))
            let d = center - omega0;
            return Ok(0.5 * self.eta * half_width * d / (d * d + half_width * half_width));
        }

        if self.support_distance(omega0) > 0.0 {
            // The pole sits in a zero region; integrate chunk by chunk so no
            // panel straddles it.
            return Ok(self.quad_over_support(|w| self.density(w) / (w - omega0))? / TWO_PI);
        }
        if self.is_jump_point(omega0) {
            return Err(Error::PvAtDiscontinuity { omega0 });
        }

        let j0 = self.density(omega0);
        if j0 == 0.0 {
            // Removable point (support edge where J vanishes continuously, or
            // an interior zero): the integrand is bounded; split at omega0 so
            // no node lands on it.
            let mut breaks = self.flat_breaks();
            insert_break(&mut breaks, omega0);
            let out = quad::integrate(
                |w| {
                    if w == omega0 {
                        0.0
                    } else {
                        self.density(w) / (w - omega0)
                    }
                },
                &breaks,
                QUAD_ABS_TOL,
                QUAD_REL_TOL,
                QUAD_MAX_PANELS,
            )?;
            return Ok(out.value / TWO_PI);
        }

        // Symmetric PV window around the singularity, clipped to the support
        // piece containing omega0 so J stays continuous across the window.
        let piece = self
            .support()
            .into_iter()
            .find(|p| p.contains(omega0))
            .expect("omega0 inside support");
        let h = (omega0 - piece.lo).min(piece.hi - omega0).min(1.0);
        let (wlo, whi) = (omega0 - h, omega0 + h);

        let mut window_breaks = vec![wlo];
        for b in self.flat_breaks() {
            if b > wlo && b < whi {
                insert_break(&mut window_breaks, b);
            }
        }
        insert_break(&mut window_breaks, omega0);
        window_breaks.push(whi);
        let window = quad::integrate(
            |w| {
                if w == omega0 {
                    0.0
                } else {
                    (self.density(w) - j0) / (w - omega0)
                }
            },
            &window_breaks,
            QUAD_ABS_TOL,
            QUAD_REL_TOL,
            QUAD_MAX_PANELS,
        )?;
        // The subtracted pole integrates to j0 * ln((whi-omega0)/(omega0-wlo)),
        // which vanishes for the symmetric window but is kept for clarity.
        let log_term = j0 * ((whi - omega0) / (omega0 - wlo)).ln();

        let mut tails = 0.0;
        for chunk in self.segments() {
            let (a, b) = (chunk[0], *chunk.last().unwrap());
            for (ca, cb) in clip_out(a, b, wlo, whi) {
                let mut breaks: Vec<f64> = vec![ca];
                for k in &chunk {
                    if *k > ca && *k < cb {
                        insert_break(&mut breaks, *k);
                    }
                }
                breaks.push(cb);
                let out = quad::integrate(
                    |w| self.density(w) / (w - omega0),
                    &breaks,
                    QUAD_ABS_TOL,
                    QUAD_REL_TOL,
                    QUAD_MAX_PANELS,
                )?;
                tails += out.value;
            }
        }

        Ok((window.value + log_term + tails) / TWO_PI)
    }

    /// (1/2pi) int J(omega) / (omega - omega0)^2 d omega, requiring omega0
    /// strictly outside the closed support.
    pub fn inverse_square_moment(&self, omega0: f64) -> Result<f64> {
        require_finite("omega0", omega0)?;
        if self.is_null() {
            return Ok(0.0);
        }
        if self.support_distance(omega0) <= 0.0 {
            return Err(Error::DivergentIntegral {
                reason: format!(
                    "inverse square moment requires omega0 = {omega0:.6e} strictly outside the support"
                ),
            });
        }
        let v = self.quad_over_support(|w| {
            let d = w - omega0;
            self.density(w) / (d * d)
        })?;
        Ok(v / TWO_PI)
    }

    /// True when the support lies inside [0, +inf).
    pub fn is_half_side(&self) -> bool {
        self.support().iter().all(|p| p.lo >= 0.0)
    }

    /// Symmetry axis for families that are mirror-symmetric about their
    /// resonance (Triangle and Square about Omega).
    pub fn symmetry_center(&self) -> Option<f64> {
        match &self.family {
            Family::Triangle { omega } | Family::Square { omega } => Some(*omega),
            _ => None,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x * x * x * x / 120.0
    } else {
        x.sin() / x
    }
}

fn insert_break(breaks: &mut Vec<f64>, b: f64) {
    if !breaks.contains(&b) {
        breaks.push(b);
        breaks.sort_by(|a, c| a.partial_cmp(c).unwrap());
    }
}

/// Parts of [a, b] outside the open window (wlo, whi).
fn clip_out(a: f64, b: f64, wlo: f64, whi: f64) -> Vec<(f64, f64)> {
    let mut parts = Vec::new();
    if a < wlo {
        parts.push((a, b.min(wlo)));
    }
    if b > whi {
        parts.push((a.max(whi), b));
    }
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ohmic_density_value() {
        let j = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        assert!(close(j.density(1.0), TWO_PI * (-1.0_f64).exp(), 1e-12));
        assert_eq!(j.density(-0.5), 0.0);
    }

    #[test]
    fn square_density_value() {
        let j = SpectralDensity::square(0.5, 1.0).unwrap();
        assert!(close(j.density(1.0), std::f64::consts::PI, 1e-14));
        assert_eq!(j.density(-0.5), 0.0);
        assert_eq!(j.density(2.5), 0.0);
    }

    #[test]
    fn eta_scaling_homogeneity() {
        let j1 = SpectralDensity::triangle(1.3, 1.0).unwrap();
        let j3 = j1.with_eta(3.9).unwrap();
        for w in [-0.3, 0.2, 0.9, 1.4, 1.9] {
            assert!(close(j3.density(w), 3.0 * j1.density(w), 1e-12));
        }
    }

    #[test]
    fn square_support_and_zero_regions() {
        let j = SpectralDensity::square(1.0, 1.0).unwrap();
        let sup = j.support();
        assert_eq!(sup.len(), 1);
        assert_eq!((sup[0].lo, sup[0].hi), (0.0, 2.0));
        let zr = j.zero_regions();
        assert_eq!(zr.len(), 2);
        assert_eq!(zr[0].lo, f64::NEG_INFINITY);
        assert_eq!(zr[0].hi, 0.0);
        assert_eq!(zr[1].lo, 2.0);
        assert_eq!(zr[1].hi, f64::INFINITY);
    }

    #[test]
    fn gapped_zero_region_is_only_the_gap() {
        let j = SpectralDensity::gapped_exponential(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        let zr = j.zero_regions();
        assert_eq!(zr.len(), 1);
        assert_eq!((zr[0].lo, zr[0].hi), (1.0, 2.0));
        assert!(!j.is_half_side());
    }

    #[test]
    fn lorentzian_has_no_zero_region() {
        let j = SpectralDensity::lorentzian(1.0, 1.0, 0.5).unwrap();
        assert!(j.zero_regions().is_empty());
    }

    #[test]
    fn all_zero_tabulated() {
        let j = SpectralDensity::tabulated(1.0, vec![(0.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!(j.support().is_empty());
        let zr = j.zero_regions();
        assert_eq!(zr.len(), 1);
        assert_eq!((zr[0].lo, zr[0].hi), (f64::NEG_INFINITY, f64::INFINITY));
    }

    #[test]
    fn tabulated_interior_gap() {
        let j = SpectralDensity::tabulated(
            1.0,
            vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 0.0), (4.0, 1.0), (5.0, 0.0)],
        )
        .unwrap();
        let sup = j.support();
        assert_eq!(sup.len(), 2);
        assert_eq!((sup[0].lo, sup[0].hi), (0.0, 2.0));
        assert_eq!((sup[1].lo, sup[1].hi), (3.0, 5.0));
        let zr = j.zero_regions();
        assert_eq!(zr.len(), 3);
        assert_eq!((zr[1].lo, zr[1].hi), (2.0, 3.0));
    }

    #[test]
    fn ohmic_kernel_closed_form_matches_quadrature() {
        // Independent check of G(t) = eta Oc^2 / (1 + i Oc t)^2 against direct
        // numerical integration of J e^{-iwt}.
        let j = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        for t in [0.0, 0.3, 1.0, 4.7, -2.2] {
            let closed = j.kernel(t).unwrap();
            let direct = quad::integrate(
                |w| Complex64::from_polar(j.density(w), -w * t),
                &[0.0, 1.0, 40.0],
                1e-12,
                1e-13,
                20_000,
            )
            .unwrap()
            .value
                / TWO_PI;
            assert!((closed - direct).norm() < 1e-10, "t={t}");
        }
        assert!((j.kernel(0.0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // G(1) = 1/(1+i)^2 = -i/2
        assert!((j.kernel(1.0).unwrap() - Complex64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn kernel_zero_equals_total_weight() {
        let cases = vec![
            SpectralDensity::ohmic(1.7, 0.8).unwrap(),
            SpectralDensity::triangle(1.0, 1.0).unwrap(),
            SpectralDensity::square(1.0, 1.0).unwrap(),
            SpectralDensity::gapped_exponential(0.7, 1.0, 2.0, 1.5, 0.7, 1.0, 2.0).unwrap(),
            SpectralDensity::lorentzian(2.0, 1.0, 0.3).unwrap(),
            SpectralDensity::tabulated(1.0, vec![(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)]).unwrap(),
        ];
        for j in cases {
            let g0 = j.kernel(0.0).unwrap();
            assert!(close(g0.re, j.total_weight(), 1e-9));
            assert!(g0.im.abs() < 1e-9);
        }
    }

    #[test]
    fn square_kernel_value() {
        let j = SpectralDensity::square(1.0, 1.0).unwrap();
        assert!(close(j.kernel(0.0).unwrap().re, 2.0, 1e-14));
    }

    #[test]
    fn triangle_total_weight() {
        let j = SpectralDensity::triangle(1.0, 1.0).unwrap();
        assert!(close(j.total_weight(), 1.0, 1e-14));
        assert!(close(j.kernel(0.0).unwrap().re, 1.0, 1e-10));
    }

    #[test]
    fn hermitian_symmetry() {
        let j = SpectralDensity::triangle(0.9, 1.0).unwrap();
        for t in [0.1, 1.7, 6.4, 19.3] {
            let a = j.kernel(t).unwrap();
            let b = j.kernel(-t).unwrap();
            assert!((a.conj() - b).norm() < 1e-10);
        }
    }

    #[test]
    fn triangle_inverse_moment_at_zero() {
        // (1/2pi) int J1(w)/w dw = 2 ln 2 for eta = 1, Omega = 1.
        let j = SpectralDensity::triangle(1.0, 1.0).unwrap();
        let v = j.inverse_moment(0.0).unwrap();
        assert!(close(v, 2.0 * std::f64::consts::LN_2, 1e-9), "got {v}");
    }

    #[test]
    fn square_inverse_moment_odd_symmetry_at_center() {
        let j = SpectralDensity::square(0.7, 1.0).unwrap();
        let v = j.inverse_moment(1.0).unwrap();
        assert!(v.abs() < 1e-10, "got {v}");
    }

    #[test]
    fn square_inverse_moment_outside_support() {
        // (1/2pi) int_0^2 2 pi eta/(w - x) dw = eta ln((2-x)/(-x)), x = -0.1997
        let j = SpectralDensity::square(0.5, 1.0).unwrap();
        let x = -0.1997;
        let v = j.inverse_moment(x).unwrap();
        let exact = 0.5 * ((2.0 - x) / (-x)).ln();
        assert!(close(v, exact, 1e-10), "got {v} expected {exact}");
        // Table row: the criterion value at the root is Omega - omega0.
        assert!(close(v, 1.1997, 2e-4));
    }

    #[test]
    fn inverse_moment_pv_inside_ohmic_support() {
        // PV (1/2pi) int J/(w-1) dw = eta (1 - e^{-1} Ei(1)) for Omega_c = 1.
        let j = SpectralDensity::ohmic(1.0, 1.0).unwrap();
        let v = j.inverse_moment(1.0).unwrap();
        assert!(close(v, 0.30282511676493393, 1e-9), "got {v}");
    }

    #[test]
    fn inverse_moment_errors_at_jump() {
        let j = SpectralDensity::square(1.0, 1.0).unwrap();
        assert!(matches!(
            j.inverse_moment(2.0),
            Err(Error::PvAtDiscontinuity { .. })
        ));
        let g = SpectralDensity::gapped_exponential(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(matches!(
            g.inverse_moment(1.0),
            Err(Error::PvAtDiscontinuity { .. })
        ));
    }

    #[test]
    fn inverse_moment_linearity_in_eta() {
        let j1 = SpectralDensity::triangle(0.8, 1.0).unwrap();
        let j2 = j1.with_eta(2.4).unwrap();
        for w0 in [-0.5, -0.01, 2.3, 0.7] {
            let a = j1.inverse_moment(w0).unwrap();
            let b = j2.inverse_moment(w0).unwrap();
            assert!(close(b, 3.0 * a, 1e-10 * (1.0 + a.abs())), "w0={w0}");
        }
    }

    #[test]
    fn half_side_inverse_moment_monotone() {
        let j = SpectralDensity::ohmic(2.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let w0 = -0.01 - 0.25 * k as f64;
            let v = j.inverse_moment(w0).unwrap();
            assert!(v < prev, "not decreasing in -omega0 at {w0}");
            assert!(v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn inverse_square_moment_values() {
        let j = SpectralDensity::square(0.5, 1.0).unwrap();
        let x = -0.1997;
        let v = j.inverse_square_moment(x).unwrap();
        let exact = 0.5 * (1.0 / (-x) - 1.0 / (2.0 - x));
        assert!(close(v, exact, 1e-9), "got {v} expected {exact}");
        assert!(close(1.0 / (1.0 + v), 0.3052, 2e-4));
    }

    #[test]
    fn inverse_square_moment_divergence_error() {
        let j = SpectralDensity::square(1.0, 1.0).unwrap();
        assert!(matches!(
            j.inverse_square_moment(1.0),
            Err(Error::DivergentIntegral { .. })
        ));
        let l = SpectralDensity::lorentzian(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            l.inverse_square_moment(5.0),
            Err(Error::DivergentIntegral { .. })
        ));
    }

    #[test]
    fn inverse_square_matches_derivative_of_inverse_moment() {
        let j = SpectralDensity::triangle(1.9, 1.0).unwrap();
        for w0 in [-0.7, -2.4, 2.9] {
            let v = j.inverse_square_moment(w0).unwrap();
            let h = 1e-5 * w0.abs().max(1.0);
            let d = (j.inverse_moment(w0 + h).unwrap() - j.inverse_moment(w0 - h).unwrap())
                / (2.0 * h);
            assert!((v - d).abs() <= 1e-5 * v.abs().max(1.0), "w0={w0}: {v} vs {d}");
        }
    }

    #[test]
    fn null_density_moments_vanish() {
        let j = SpectralDensity::ohmic(0.0, 1.0).unwrap();
        assert_eq!(j.total_weight(), 0.0);
        assert_eq!(j.inverse_moment(0.3).unwrap(), 0.0);
        assert_eq!(j.inverse_square_moment(0.3).unwrap(), 0.0);
        assert_eq!(j.kernel(2.0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn density_non_negative_on_grid() {
        let cases = vec![
            SpectralDensity::ohmic(1.0, 1.0).unwrap(),
            SpectralDensity::triangle(1.0, 1.0).unwrap(),
            SpectralDensity::square(1.0, 1.0).unwrap(),
            SpectralDensity::gapped_exponential(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0).unwrap(),
            SpectralDensity::lorentzian(1.0, 0.0, 1.0).unwrap(),
        ];
        for j in &cases {
            for k in -400..=400 {
                let w = k as f64 * 0.01;
                assert!(j.density(w) >= 0.0);
            }
        }
        // half-side families vanish identically for w <= 0
        for j in &cases[..3] {
            for k in 0..=400 {
                let w = -(k as f64) * 0.01;
                assert_eq!(j.density(w), 0.0, "w={w}");
            }
        }
    }

    #[test]
    fn lorentzian_closed_form_moments() {
        // Frozen from an independent arbitrary-precision PV quadrature.
        let j = SpectralDensity::lorentzian(1.3, 0.7, 0.4).unwrap();
        assert!(close(j.inverse_moment(-2.0).unwrap(), 0.094228187919463087, 1e-14));
        // w0 = 1.2 gives exactly -13/41.
        assert!(close(j.inverse_moment(1.2).unwrap(), -13.0 / 41.0, 1e-14));
        assert!(close(j.total_weight(), 0.5 * 1.3 * 0.4, 1e-15));
    }
}
