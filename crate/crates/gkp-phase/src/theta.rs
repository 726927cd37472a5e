//! Jacobi theta functions with rational characteristics, scaled to a period or
//! a phase-space lattice, and their Dirac-comb (Ш) limits.
//!
//! The scaled 1-D function implemented by [`Theta1DSpec`] is
//!
//! ```text
//! theta_T[v1, v2](z, tau) = |T|^{-1/2} * sum_n exp(i pi (n+v1)^2 tau/T^2
//!                                              + 2 pi i (n+v1)(z/T + v2))
//! ```
//!
//! which for tau = 2 pi i sigma^2 is the same thing as a phased pulse train of
//! normalized Gaussians,
//!
//! ```text
//! theta_T[v1, v2](x, 2 pi i sigma^2)
//!     = sqrt(|T|) * sum_n e^{-2 pi i n v1} G_{sigma^2}(x + (n + v2) T),
//! ```
//!
//! with `G_c(y) = (2 pi c)^{-1/2} e^{-y^2/(2c)}`. The `|T|^{-1/2}` scaling makes
//! the L^2 mass per period independent of `T` at fixed sigma/T. Both series
//! representations are implemented; [`Theta1DSpec::eval`] switches between them
//! on Im(tau)/T^2 so that the retained terms always decay fast and there is no
//! catastrophic cancellation between pulses (the Fourier series alone loses all
//! significance between spikes once sigma << T).
//!
//! The 2-D analogue on a lattice with column-vector matrix `A` is carried by
//! [`LatticeSum`]:
//!
//! ```text
//! theta_A[v1, v2](x, 2 pi i Sigma)
//!     = sqrt(|det A|) * sum_{n in Z^2} e^{-2 pi i v1.n} G_Sigma(x + A(n + v2)),
//! ```
//!
//! evaluated by summing square shells of lattice points around the dominant
//! spike. Setting the spike covariance to zero turns the sum into the
//! distribution Ш_A[v1, v2]: pointwise evaluation becomes an error and the
//! object instead enumerates its support with exact weights
//! ([`LatticeSum::sha_support`]).
//!
//! Characteristics (v1, v2) are exact rationals throughout: they carry the
//! logical (qubit) content of GKP objects, and floating-point drift there would
//! silently corrupt it. Moving them to the canonical box [0,1)^2 multiplies the
//! function by the exact unit phase `exp(2 pi i v1.m2)` where `m2` is the
//! integer part removed from `v2` (integer parts of `v1` contribute nothing).

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use num_rational::Rational64;

use crate::plane::Gaussian2D;
use crate::{Error, Rect, Result};

/// Hard cap on terms per direction in 1-D series evaluation.
const MAX_TERMS_1D: i64 = 100_000;

/// Hard cap on square-shell index in 2-D lattice sums.
const MAX_SHELLS_2D: usize = 4_000;

/// Consecutive sub-threshold terms required before a summation direction stops.
const TAIL_RUN: usize = 3;

/// e^{2 pi i turns}, exact at quarter turns.
///
/// Phases of lattice sums are rational multiples of a full turn; the denominators
/// appearing in GKP work are 1, 2 and 4, for which the result is exactly one of
/// {1, i, -1, -i}. Other denominators fall back to sin/cos.
pub fn unit_phase(turns: Rational64) -> Complex64 {
    let frac = turns - turns.floor();
    let (num, den) = (*frac.numer(), *frac.denom());
    match (num, den) {
        (0, 1) => Complex64::new(1.0, 0.0),
        (1, 2) => Complex64::new(-1.0, 0.0),
        (1, 4) => Complex64::new(0.0, 1.0),
        (3, 4) => Complex64::new(0.0, -1.0),
        _ => {
            let angle = std::f64::consts::TAU * (num as f64) / (den as f64);
            Complex64::new(angle.cos(), angle.sin())
        }
    }
}

/// Period of the Fourier-dual comb: `T -> 2 pi / T`.
///
/// A position-basis comb of period `T` transforms to a momentum-basis comb of
/// period `2 pi / T`; on the GKP lattice this swaps `2 sqrt(pi) <-> sqrt(pi)`.
/// The map is an involution.
pub fn fourier_dual_period(period: f64) -> Result<f64> {
    if period == 0.0 || !period.is_finite() {
        return Err(Error::InvalidInput(format!(
            "Fourier-dual period undefined for T = {period}"
        )));
    }
    Ok(std::f64::consts::TAU / period)
}

/// Best rational approximation `p/q` to `x` with `q <= max_den`, by continued
/// fractions; errors if no convergent lands within `abs_tol`.
///
/// Used when a phase-space displacement must be folded into the second
/// characteristic of a lattice sum: that step is exact only if the displacement
/// is a rational combination of lattice vectors, and this is the gate that
/// decides whether it is.
pub fn rationalize(x: f64, max_den: i64, abs_tol: f64) -> Result<Rational64> {
    if !x.is_finite() || x.abs() >= 4.0e18 {
        return Err(Error::InvalidInput(format!("cannot rationalize {x}")));
    }
    if max_den < 1 {
        return Err(Error::InvalidInput(format!("max denominator {max_den} < 1")));
    }
    // Continued-fraction convergents p/q of x, stopping at the first within tolerance.
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (x.floor() as i64, 1i64);
    let mut rest = x - x.floor();
    for _ in 0..64 {
        if q <= max_den && (x - p as f64 / q as f64).abs() <= abs_tol {
            return Ok(Rational64::new(p, q));
        }
        if rest.abs() < 1e-18 {
            break;
        }
        let a = (1.0 / rest).floor();
        rest = 1.0 / rest - a;
        let a = a as i64;
        let (p_next, q_next) = (
            a.checked_mul(p).and_then(|v| v.checked_add(p_prev)),
            a.checked_mul(q).and_then(|v| v.checked_add(q_prev)),
        );
        match (p_next, q_next) {
            (Some(pn), Some(qn)) if qn <= max_den || q <= max_den => {
                (p_prev, q_prev) = (p, q);
                (p, q) = (pn, qn);
            }
            _ => break,
        }
    }
    if q <= max_den && (x - p as f64 / q as f64).abs() <= abs_tol {
        return Ok(Rational64::new(p, q));
    }
    Err(Error::InvalidInput(format!(
        "{x} has no rational approximation p/q with q <= {max_den} within {abs_tol:.1e}"
    )))
}

/// Rational characteristic pair (v1, v2) of a 2-D theta/comb object.
///
/// `v1` modulates spike phases (weight `e^{-2 pi i v1.n}` on lattice site `n`)
/// and `v2` translates the lattice by the fraction `A v2` of a cell. The pair is
/// held exactly; see [`Characteristics::reduce`] for the canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Characteristics {
    pub v1: [Rational64; 2],
    pub v2: [Rational64; 2],
}

impl Characteristics {
    pub fn new(v1: [Rational64; 2], v2: [Rational64; 2]) -> Self {
        Characteristics { v1, v2 }
    }

    /// Both characteristics zero: the plain unphased, untranslated lattice.
    pub fn zero() -> Self {
        let z = Rational64::new(0, 1);
        Characteristics { v1: [z, z], v2: [z, z] }
    }

    /// All four components already in [0, 1).
    pub fn is_canonical(&self) -> bool {
        let unit = |r: &Rational64| *r >= Rational64::new(0, 1) && *r < Rational64::new(1, 1);
        self.v1.iter().all(unit) && self.v2.iter().all(unit)
    }

    /// Move every component into [0, 1) and return the accrued phase, so that
    /// `object[self] = phase * object[canonical]`.
    ///
    /// Shifting `v1` by integers relabels the summation index and is phase-free;
    /// shifting `v2` by integers `m2` multiplies the function by the exact unit
    /// phase `e^{2 pi i v1.m2}`.
    pub fn reduce(&self) -> (Self, Complex64) {
        let frac = |r: Rational64| r - r.floor();
        let v1 = [frac(self.v1[0]), frac(self.v1[1])];
        let m2 = [self.v2[0].floor(), self.v2[1].floor()];
        let v2 = [self.v2[0] - m2[0], self.v2[1] - m2[1]];
        let phase = unit_phase(v1[0] * m2[0] + v1[1] * m2[1]);
        (Characteristics { v1, v2 }, phase)
    }
}

/// A scaled 1-D theta function `theta_T[v1, v2](., tau)`, or its comb limit.
///
/// `tau = None` marks the Ш (Dirac-comb) limit `Im(tau) -> 0^+`: spikes of zero
/// width, which refuse pointwise evaluation but still participate in algebraic
/// identities (period splitting, characteristic reduction).
///
/// The stored period is always positive: a mirrored train with `T < 0` is the
/// same function with both characteristics negated, and [`Theta1DSpec::reflected`]
/// performs that canonicalization, returning the unit phase it costs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta1DSpec {
    period: f64,
    v1: Rational64,
    v2: Rational64,
    tau: Option<Complex64>,
}

impl Theta1DSpec {
    /// Spec with positive period and upper-half-plane tau.
    pub fn new(period: f64, v1: Rational64, v2: Rational64, tau: Complex64) -> Result<Self> {
        Self::check_period(period)?;
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(Error::InvalidInput(format!(
                "tau = {tau} is not in the upper half plane (need Im(tau) > 0)"
            )));
        }
        Ok(Theta1DSpec { period, v1, v2, tau: Some(tau) })
    }

    /// Dirac-comb limit of the pulse train: spikes at `-(n + v2) T` with
    /// weights `sqrt(T) e^{-2 pi i n v1}`.
    pub fn sha(period: f64, v1: Rational64, v2: Rational64) -> Result<Self> {
        Self::check_period(period)?;
        Ok(Theta1DSpec { period, v1, v2, tau: None })
    }

    fn check_period(period: f64) -> Result<()> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period must be positive and finite, got {period} \
                 (negative periods reduce via Theta1DSpec::reflected)"
            )));
        }
        Ok(())
    }

    /// Canonicalize a possibly negative period.
    ///
    /// `theta_{-T}[v1, v2] = theta_T[-v1, -v2]` (substitute `n -> -n` in the
    /// series), and reducing the negated characteristics back to [0, 1)
    /// contributes the returned unit phase: the original function equals
    /// `phase * returned_spec`.
    pub fn reflected(
        period: f64,
        v1: Rational64,
        v2: Rational64,
        tau: Option<Complex64>,
    ) -> Result<(Self, Complex64)> {
        if period == 0.0 || !period.is_finite() {
            return Err(Error::InvalidInput(format!("period must be nonzero, got {period}")));
        }
        let (v1, v2, t) = if period < 0.0 { (-v1, -v2, -period) } else { (v1, v2, period) };
        let (canon, phase) = reduce_1d(v1, v2);
        let spec = match tau {
            Some(tau) => Self::new(t, canon.0, canon.1, tau)?,
            None => Self::sha(t, canon.0, canon.1)?,
        };
        Ok((spec, phase))
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn v1(&self) -> Rational64 {
        self.v1
    }

    pub fn v2(&self) -> Rational64 {
        self.v2
    }

    pub fn tau(&self) -> Option<Complex64> {
        self.tau
    }

    /// True for the Dirac-comb limit (no tau).
    pub fn is_sha(&self) -> bool {
        self.tau.is_none()
    }

    /// Evaluate at `z`, truncating so the omitted tail stays below `rel_tol`
    /// times the largest retained term.
    ///
    /// Dispatches on `Im(tau)/T^2`: when the rescaled tau is at least `i`, the
    /// Fourier series converges in a handful of terms; otherwise the function is
    /// a train of narrow pulses and the Gaussian pulse-train form is used, which
    /// keeps every retained term nonnegative in magnitude ordering and avoids
    /// the total cancellation the Fourier series suffers between spikes.
    pub fn eval(&self, z: Complex64, rel_tol: f64) -> Result<Complex64> {
        let tau = self.tau.ok_or(Error::CombPointwiseEval)?;
        check_rel_tol(rel_tol)?;
        let (canon, phase) = reduce_1d(self.v1, self.v2);
        let (v1, v2) = canon;
        let t = self.period;
        let tau_scaled = tau / (t * t);
        let value = if tau_scaled.im >= 1.0 {
            fourier_series_1d(v1, v2, z / t, tau_scaled, rel_tol)? / t.sqrt()
        } else {
            pulse_train_1d(v1, v2, z, t, tau / Complex64::new(0.0, std::f64::consts::TAU), rel_tol)?
                * t.sqrt()
        };
        Ok(phase * value)
    }

    /// Rewrite a half-integer-characteristic spec as a balanced pair at double
    /// or half the period:
    ///
    /// ```text
    /// theta_T[j/2, 0] = (1/sqrt(2)) ( theta_{2T}[0, 0] + (-1)^j theta_{2T}[0, 1/2] )
    /// theta_T[0, k/2] = (1/sqrt(2)) ( theta_{T/2}[0, 0] + (-1)^k theta_{T/2}[1/2, 0] )
    /// ```
    ///
    /// (split the pulse train into even and odd pulses, or merge the two phased
    /// half-trains). The input with both characteristics zero uses the first
    /// form with `j = 0`. Returns `[(spec, coeff); 2]` with the input equal to
    /// the coefficient-weighted sum; `tau` is carried through unchanged, so comb
    /// limits split the same way.
    pub fn split_half_period(&self) -> Result<[(Self, f64); 2]> {
        let (canon, phase) = reduce_1d(self.v1, self.v2);
        let (v1, v2) = canon;
        // The reduction phase for half-integer v1 and integer v2 is +-1.
        debug_assert!(phase.im == 0.0);
        let sign_in = phase.re;
        let zero = Rational64::new(0, 1);
        let half = Rational64::new(1, 2);
        let build = |period: f64, v1, v2| -> Result<Self> {
            match self.tau {
                Some(tau) => Self::new(period, v1, v2, tau),
                None => Self::sha(period, v1, v2),
            }
        };
        let w = std::f64::consts::FRAC_1_SQRT_2 * sign_in;
        if v2 == zero && (v1 == zero || v1 == half) {
            let sign = if v1 == half { -1.0 } else { 1.0 };
            Ok([
                (build(2.0 * self.period, zero, zero)?, w),
                (build(2.0 * self.period, zero, half)?, sign * w),
            ])
        } else if v1 == zero && v2 == half {
            Ok([
                (build(0.5 * self.period, zero, zero)?, w),
                (build(0.5 * self.period, half, zero)?, -w),
            ])
        } else {
            Err(Error::InvalidInput(format!(
                "period splitting covers characteristics (j/2, 0) and (0, 1/2) only, got ({}, {})",
                v1, v2
            )))
        }
    }
}

fn reduce_1d(v1: Rational64, v2: Rational64) -> ((Rational64, Rational64), Complex64) {
    let v1c = v1 - v1.floor();
    let m2 = v2.floor();
    let v2c = v2 - m2;
    ((v1c, v2c), unit_phase(v1c * m2))
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidInput(format!(
            "relative tolerance must lie in (0, 1), got {rel_tol}"
        )));
    }
    Ok(())
}

/// Unscaled Fourier series `sum_n exp(i pi (n+v1)^2 tau + 2 pi i (n+v1)(w+v2))`.
fn fourier_series_1d(
    v1: Rational64,
    v2: Rational64,
    w: Complex64,
    tau: Complex64,
    rel_tol: f64,
) -> Result<Complex64> {
    let v1f = rational_to_f64(v1);
    let v2f = rational_to_f64(v2);
    // |term(n)| = exp(-pi (n+v1)^2 Im(tau) - 2 pi (n+v1) Im(w+v2)) peaks here:
    let center = (-v1f - w.im / tau.im).round() as i64;
    let i_pi = Complex64::new(0.0, std::f64::consts::PI);
    let term = |n: i64| -> Complex64 {
        let m = n as f64 + v1f;
        (i_pi * (m * m) * tau + 2.0 * i_pi * m * (w + v2f)).exp()
    };
    sum_outward(center, rel_tol, term)
}

/// Pulse-train form `sum_n e^{-2 pi i n v1} G_c(z + (n+v2) T)` with complex
/// pulse covariance `c` (`Re c > 0` guaranteed by `Im tau > 0`).
fn pulse_train_1d(
    v1: Rational64,
    v2: Rational64,
    z: Complex64,
    t: f64,
    c: Complex64,
    rel_tol: f64,
) -> Result<Complex64> {
    let v2f = rational_to_f64(v2);
    let norm = (std::f64::consts::TAU * c).sqrt();
    let center = (-z.re / t - v2f).round() as i64;
    let term = |n: i64| -> Complex64 {
        let y = z + (n as f64 + v2f) * t;
        let gauss = (-(y * y) / (2.0 * c)).exp() / norm;
        unit_phase(-v1 * Rational64::from_integer(n)) * gauss
    };
    sum_outward(center, rel_tol, term)
}

/// Sum `term(n)` outward from `center`, stopping each direction after
/// [`TAIL_RUN`] consecutive terms below `rel_tol` times the largest magnitude
/// seen (the terms decay super-exponentially once past the peak, so the run
/// length only guards against hitting an incidental zero of a phased term).
/// Kahan-compensated; errors if either direction exhausts [`MAX_TERMS_1D`].
fn sum_outward(center: i64, rel_tol: f64, term: impl Fn(i64) -> Complex64) -> Result<Complex64> {
    let mut sum = KahanC::new();
    let mut max_mag: f64 = 0.0;
    let c = term(center);
    max_mag = max_mag.max(c.norm());
    sum.add(c);
    for dir in [1i64, -1i64] {
        let mut quiet = 0usize;
        let mut step = 1i64;
        loop {
            let t = term(center + dir * step);
            max_mag = max_mag.max(t.norm());
            sum.add(t);
            // <= so that fully underflowed regions (term = max = 0) still
            // count as quiet and the sum terminates.
            if t.norm() <= rel_tol * max_mag {
                quiet += 1;
                if quiet >= TAIL_RUN {
                    break;
                }
            } else {
                quiet = 0;
            }
            step += 1;
            if step > MAX_TERMS_1D {
                return Err(Error::TruncationGuard(MAX_TERMS_1D as usize));
            }
        }
    }
    Ok(sum.value())
}

fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// 2-D lattice of Gaussian spikes (or delta spikes) with phased weights and an
/// optional Gaussian envelope, all in one exact analytic carrier:
///
/// ```text
/// value(x) = prefactor * envelope(x) * theta_A[v1, v2](x, 2 pi i Sigma_spike)
/// ```
///
/// with `envelope(x)` a normalized Gaussian when present and `theta_A` the
/// scaled lattice sum defined at module level. `Sigma_spike = 0` makes the
/// object a weighted Dirac comb Ш_A[v1, v2]; combs enumerate their support
/// instead of evaluating pointwise.
///
/// Characteristics are canonicalized at construction, with the reduction phase
/// folded into the prefactor, so equality of two sums can be read off the
/// stored fields.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSum {
    lattice: Matrix2<f64>,
    chars: Characteristics,
    spike_cov: Matrix2<f64>,
    envelope: Option<Gaussian2D>,
    prefactor: Complex64,
}

impl LatticeSum {
    pub fn new(
        lattice: Matrix2<f64>,
        chars: Characteristics,
        spike_cov: Matrix2<f64>,
        envelope: Option<Gaussian2D>,
        prefactor: Complex64,
    ) -> Result<Self> {
        let det = lattice.determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::InvalidInput(format!(
                "lattice matrix is singular (det = {det:.3e})"
            )));
        }
        check_spike_cov(&spike_cov)?;
        let (canon, phase) = chars.reduce();
        Ok(LatticeSum {
            lattice,
            chars: canon,
            spike_cov,
            envelope,
            prefactor: prefactor * phase,
        })
    }

    /// Weighted Dirac comb Ш_A[v1, v2] (zero spike covariance, unit prefactor).
    pub fn comb(lattice: Matrix2<f64>, chars: Characteristics) -> Result<Self> {
        Self::new(lattice, chars, Matrix2::zeros(), None, Complex64::new(1.0, 0.0))
    }

    /// Envelope-free theta sum with the given spike covariance.
    pub fn theta(lattice: Matrix2<f64>, chars: Characteristics, spike_cov: Matrix2<f64>) -> Result<Self> {
        Self::new(lattice, chars, spike_cov, None, Complex64::new(1.0, 0.0))
    }

    pub fn lattice(&self) -> Matrix2<f64> {
        self.lattice
    }

    pub fn chars(&self) -> Characteristics {
        self.chars
    }

    pub fn spike_cov(&self) -> Matrix2<f64> {
        self.spike_cov
    }

    pub fn envelope(&self) -> Option<&Gaussian2D> {
        self.envelope.as_ref()
    }

    pub fn prefactor(&self) -> Complex64 {
        self.prefactor
    }

    /// True when the spikes are delta distributions (zero spike covariance).
    pub fn is_comb(&self) -> bool {
        self.spike_cov == Matrix2::zeros()
    }

    /// Same object with the prefactor multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        out.prefactor *= factor;
        out
    }

    /// Replace the stored fields wholesale; used by the phase-plane calculus
    /// which transforms several fields at once and re-validates.
    pub(crate) fn rebuild(
        &self,
        lattice: Matrix2<f64>,
        chars: Characteristics,
        spike_cov: Matrix2<f64>,
        envelope: Option<Gaussian2D>,
        prefactor: Complex64,
    ) -> Result<Self> {
        Self::new(lattice, chars, spike_cov, envelope, prefactor)
    }

    /// Pointwise value at `x` (spiky objects only).
    ///
    /// Sums square shells of lattice sites around the site nearest to `x`,
    /// stopping once two consecutive shells fall below `rel_tol` times the
    /// largest term retained so far (with a minimum of three shells so thin
    /// diagonal spikes cannot stop the sum prematurely).
    pub fn eval(&self, x: Vector2<f64>, rel_tol: f64) -> Result<Complex64> {
        check_rel_tol(rel_tol)?;
        if self.is_comb() {
            return Err(Error::CombPointwiseEval);
        }
        let sigma_inv = self
            .spike_cov
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular spike covariance".into()))?;
        let det = self.spike_cov.determinant();
        let gauss_norm = 1.0 / (std::f64::consts::TAU * det.sqrt());
        let lat_inv = self.lattice.try_inverse().expect("checked at construction");
        let center_frac = -lat_inv * x
            - Vector2::new(rational_to_f64(self.chars.v2[0]), rational_to_f64(self.chars.v2[1]));
        let n0 = [center_frac[0].round() as i64, center_frac[1].round() as i64];
        let v2 = Vector2::new(rational_to_f64(self.chars.v2[0]), rational_to_f64(self.chars.v2[1]));

        let term = |n1: i64, n2: i64| -> Complex64 {
            let nv = Vector2::new(n1 as f64, n2 as f64) + v2;
            let y = x + self.lattice * nv;
            let quad = 0.5 * (y.transpose() * sigma_inv * y)[(0, 0)];
            let weight = unit_phase(
                -(self.chars.v1[0] * Rational64::from_integer(n1)
                    + self.chars.v1[1] * Rational64::from_integer(n2)),
            );
            weight * (gauss_norm * (-quad).exp())
        };

        let mut sum = KahanC::new();
        let mut max_mag: f64 = 0.0;
        let mut quiet_shells = 0usize;
        for k in 0..=MAX_SHELLS_2D {
            let mut shell_max: f64 = 0.0;
            for (n1, n2) in square_shell(n0, k as i64) {
                let t = term(n1, n2);
                shell_max = shell_max.max(t.norm());
                sum.add(t);
            }
            max_mag = max_mag.max(shell_max);
            if k >= 2 && shell_max <= rel_tol * max_mag {
                quiet_shells += 1;
                if quiet_shells >= 2 {
                    break;
                }
            } else {
                quiet_shells = 0;
            }
            if k == MAX_SHELLS_2D {
                return Err(Error::TruncationGuard(MAX_SHELLS_2D));
            }
        }

        let theta = self.lattice.determinant().abs().sqrt() * sum.value();
        let env = match &self.envelope {
            Some(g) => g.eval(x),
            None => 1.0,
        };
        Ok(self.prefactor * env * theta)
    }

    /// Enumerate the delta spikes of a comb inside `window`.
    ///
    /// Spikes sit at `x_n = -A (n + v2)` and carry weights
    /// `sqrt(|det A|) e^{-2 pi i v1.n} * prefactor * envelope(x_n)`. Results are
    /// ordered by (n2, n1) for deterministic output.
    pub fn sha_support(&self, window: Rect) -> Result<Vec<(Vector2<f64>, Complex64)>> {
        if !self.is_comb() {
            return Err(Error::InvalidInput(
                "sha_support needs a delta-comb (zero spike covariance); blur carriers evaluate pointwise".into(),
            ));
        }
        window.validate()?;
        let lat_inv = self.lattice.try_inverse().expect("checked at construction");
        let v2 = Vector2::new(rational_to_f64(self.chars.v2[0]), rational_to_f64(self.chars.v2[1]));
        // Bounding box in index space: map the window corners through n = -A^{-1} x - v2.
        let corners = [
            Vector2::new(window.q_min, window.p_min),
            Vector2::new(window.q_min, window.p_max),
            Vector2::new(window.q_max, window.p_min),
            Vector2::new(window.q_max, window.p_max),
        ];
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        for c in corners {
            let n = -lat_inv * c - v2;
            for ax in 0..2 {
                lo[ax] = lo[ax].min(n[ax].floor() as i64 - 1);
                hi[ax] = hi[ax].max(n[ax].ceil() as i64 + 1);
            }
        }
        let root_det = self.lattice.determinant().abs().sqrt();
        let mut out = Vec::new();
        for n2 in lo[1]..=hi[1] {
            for n1 in lo[0]..=hi[0] {
                let nv = Vector2::new(n1 as f64, n2 as f64) + v2;
                let x = -(self.lattice * nv);
                if !window.contains(x) {
                    continue;
                }
                let phase = unit_phase(
                    -(self.chars.v1[0] * Rational64::from_integer(n1)
                        + self.chars.v1[1] * Rational64::from_integer(n2)),
                );
                let env = match &self.envelope {
                    Some(g) => g.eval(x),
                    None => 1.0,
                };
                out.push((x, self.prefactor * phase * (root_det * env)));
            }
        }
        Ok(out)
    }
}

fn check_spike_cov(sigma: &Matrix2<f64>) -> Result<()> {
    let scale = sigma.norm().max(1.0);
    if (sigma[(0, 1)] - sigma[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "spike covariance is not symmetric: off-diagonal {} vs {}",
            sigma[(0, 1)],
            sigma[(1, 0)]
        )));
    }
    let (lo, _) = crate::plane::sym_eigenvalues(sigma);
    if lo < -1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "spike covariance has negative eigenvalue {lo:.3e}"
        )));
    }
    Ok(())
}

/// Indices on the square shell of Chebyshev radius `k` around `n0`.
fn square_shell(n0: [i64; 2], k: i64) -> Vec<(i64, i64)> {
    if k == 0 {
        return vec![(n0[0], n0[1])];
    }
    let mut out = Vec::with_capacity(8 * k as usize);
    for d in -k..=k {
        out.push((n0[0] + d, n0[1] - k));
        out.push((n0[0] + d, n0[1] + k));
    }
    for d in (-k + 1)..k {
        out.push((n0[0] - k, n0[1] + d));
        out.push((n0[0] + k, n0[1] + d));
    }
    out
}

/// Kahan-compensated complex accumulator.
struct KahanC {
    sum: Complex64,
    comp: Complex64,
}

impl KahanC {
    fn new() -> Self {
        KahanC { sum: Complex64::new(0.0, 0.0), comp: Complex64::new(0.0, 0.0) }
    }

    fn add(&mut self, v: Complex64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> Complex64 {
        self.sum
    }
}
