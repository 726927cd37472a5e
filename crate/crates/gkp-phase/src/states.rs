//! Ideal and finite-energy GKP states and operators on the square lattice.
//!
//! The logical Pauli operators of the square-lattice GKP code have Wigner
//! functions that are phased Dirac combs on the lattice `sqrt(pi) I`: comb
//! `mu` carries characteristics `(Omega l_mu / 2, l_mu / 2)` with shift vectors
//! `l = {(0,0), (1,0), (1,1), (0,1)}` for I, X, Y, Z. Every encoded operator is
//! a 4-component Bloch combination of those combs; every finite-energy state is
//! the same combination with the spikes broadened to covariance `Sigma_spike`
//! and the whole picture damped by a Gaussian envelope `Sigma_env`, both
//! derived from a noise matrix `Xi`:
//!
//! ```text
//! Sigma_spike = (1/2) Omega^T Xi^{-1} Omega,    Sigma_env = Xi / 2,
//! Xi = R_phi^T diag(1/kappa^2, 1/Delta^2) R_phi.
//! ```
//!
//! The minimum-envelope condition `Sigma_env = Sigma_spike / det(2 Sigma_spike)`
//! singles out the envelopes of pure embedded-error states; wider envelopes are
//! classical mixtures of those, narrower ones describe nothing physical. The
//! classifier [`check_envelope_field`] decides the three cases by deconvolving
//! the minimal envelope back out of a candidate and asking whether a positive
//! distribution remains.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use num_rational::Rational64;

use crate::plane::{
    check_symmetric, sample_field, sym_eigenvalues, symmetrize, Field2D, Gaussian2D, WignerFn,
};
use crate::theta::{Characteristics, LatticeSum};
use crate::{Error, Rect, Result, DEFAULT_REL_TOL, LOW_NOISE_MAX, SQRT_PI, TRACE_FACTOR};

/// Matching tolerance for the minimum-envelope identity on constructed states.
pub const MIN_ENV_TOL: f64 = 1e-10;

/// Grid-sampled state Wigner functions may exceed 1/pi by at most this
/// relative amount before being rejected as non-states.
pub const WIGNER_BOUND_TOL: f64 = 1e-6;

/// The four logical Pauli labels with their lattice shift vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliIndex {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl PauliIndex {
    pub const ALL: [PauliIndex; 4] = [PauliIndex::I, PauliIndex::X, PauliIndex::Y, PauliIndex::Z];

    /// Shift vector `l_mu`: the logical displacement is `sqrt(pi) l_mu`.
    pub fn shift_vector(self) -> [i64; 2] {
        match self {
            PauliIndex::I => [0, 0],
            PauliIndex::X => [1, 0],
            PauliIndex::Y => [1, 1],
            PauliIndex::Z => [0, 1],
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Coefficients `(r0, r1, r2, r3)` of an encoded operator in the GKP Pauli
/// basis; states have `r0 = 1` and `|(r1, r2, r3)| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Bloch4 {
    pub r: [f64; 4],
}

impl Bloch4 {
    pub fn new(r: [f64; 4]) -> Self {
        Bloch4 { r }
    }

    /// State-form vector `(1, r1, r2, r3)`.
    pub fn logical(r1: f64, r2: f64, r3: f64) -> Self {
        Bloch4 { r: [1.0, r1, r2, r3] }
    }

    pub fn r(&self, mu: PauliIndex) -> f64 {
        self.r[mu.index()]
    }

    /// Length of the logical part `(r1, r2, r3)`.
    pub fn logical_norm(&self) -> f64 {
        (self.r[1] * self.r[1] + self.r[2] * self.r[2] + self.r[3] * self.r[3]).sqrt()
    }

    /// Enforce the state constraints `r0 = 1`, `|r_vec| <= 1`.
    pub fn ensure_state(&self) -> Result<()> {
        if (self.r[0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "state Bloch vector needs r0 = 1, got {}",
                self.r[0]
            )));
        }
        let len = self.logical_norm();
        if len > 1.0 + 1e-9 {
            return Err(Error::InvalidInput(format!(
                "logical Bloch vector has length {len:.6} > 1"
            )));
        }
        Ok(())
    }

    /// Rescaled so `r0 = 1`.
    pub fn normalized(&self) -> Result<Bloch4> {
        if self.r[0] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "cannot normalize Bloch vector with r0 = {}",
                self.r[0]
            )));
        }
        Ok(Bloch4 {
            r: [1.0, self.r[1] / self.r[0], self.r[2] / self.r[0], self.r[3] / self.r[0]],
        })
    }
}

/// Noise parameters of a finite-energy GKP state.
///
/// `delta2` is the spike variance scale of the position quadrature (and the
/// inverse envelope scale of momentum), `kappa2` the reverse; `phi` rotates the
/// whole noise ellipse. `Xi = R_phi^T diag(1/kappa2, 1/delta2) R_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    delta2: f64,
    kappa2: f64,
    phi: f64,
}

impl NoiseSpec {
    pub fn new(delta2: f64, kappa2: f64, phi: f64) -> Result<Self> {
        if !(delta2 > 0.0) || !(kappa2 > 0.0) || !phi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "noise variances must be positive, got Delta^2 = {delta2}, kappa^2 = {kappa2}"
            )));
        }
        Ok(NoiseSpec { delta2, kappa2, phi })
    }

    /// Symmetric noise `Delta^2 = kappa^2 = beta`, no rotation.
    pub fn symmetric(beta: f64) -> Result<Self> {
        Self::new(beta, beta, 0.0)
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    fn rotation(&self) -> Matrix2<f64> {
        let (s, c) = self.phi.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    /// Noise matrix `Xi = R_phi^T diag(1/kappa^2, 1/Delta^2) R_phi`.
    pub fn xi(&self) -> Matrix2<f64> {
        let r = self.rotation();
        r.transpose() * Matrix2::new(1.0 / self.kappa2, 0.0, 0.0, 1.0 / self.delta2) * r
    }

    /// Spike covariance `(1/2) Omega^T Xi^{-1} Omega = (1/2) R^T diag(Delta^2, kappa^2) R`.
    pub fn spike_cov(&self) -> Matrix2<f64> {
        let r = self.rotation();
        0.5 * r.transpose() * Matrix2::new(self.delta2, 0.0, 0.0, self.kappa2) * r
    }

    /// Envelope covariance `Xi / 2`.
    pub fn env_cov(&self) -> Matrix2<f64> {
        0.5 * self.xi()
    }

    pub fn is_low_noise(&self) -> bool {
        self.delta2 <= LOW_NOISE_MAX && self.kappa2 <= LOW_NOISE_MAX
    }

    /// Gate for the narrow-spike closed forms: both variances at most
    /// [`LOW_NOISE_MAX`].
    pub fn ensure_low_noise(&self) -> Result<()> {
        if !self.is_low_noise() {
            return Err(Error::OutsideLowNoise(format!(
                "Delta^2 = {}, kappa^2 = {} exceed {}",
                self.delta2, self.kappa2, LOW_NOISE_MAX
            )));
        }
        Ok(())
    }

    /// True when `Xi` is a multiple of the identity (`Delta^2 = kappa^2`, any
    /// rotation); such states Fourier-transform onto themselves, which is what
    /// makes them usable as both-quadrature ancillae.
    pub fn is_symmetric(&self) -> bool {
        (self.delta2 - self.kappa2).abs() <= 1e-12 * self.delta2.max(self.kappa2)
    }
}

/// The Wigner comb of logical Pauli `mu`: lattice `sqrt(pi) I`, characteristics
/// `(Omega l_mu / 2, l_mu / 2)`, optionally broadened and enveloped.
pub fn pauli_wigner(
    mu: PauliIndex,
    spike_cov: Matrix2<f64>,
    envelope: Option<Gaussian2D>,
) -> Result<LatticeSum> {
    let l = mu.shift_vector();
    // Omega (l1, l2) = (l2, -l1).
    let v1 = [Rational64::new(l[1], 2), Rational64::new(-l[0], 2)];
    let v2 = [Rational64::new(l[0], 2), Rational64::new(l[1], 2)];
    LatticeSum::new(
        Matrix2::identity() * SQRT_PI,
        Characteristics::new(v1, v2),
        spike_cov,
        envelope,
        Complex64::new(1.0, 0.0),
    )
}

/// A GKP-encoded operator/state as a Bloch combination of the four Pauli
/// carriers: `W(x) = sum_mu r_mu W_mu(x) / norm`.
///
/// All four carriers share one spike covariance and one envelope. For ideal
/// and blurred-ideal (unnormalizable) objects `norm = 2`, the algebraic factor
/// of the Pauli decomposition `rho = (1/2) sum r_mu Pauli_mu`; for normalized
/// finite-energy states `norm` is the theta-constant sum fixing the total
/// integral to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GKPWigner {
    bloch: Bloch4,
    terms: [LatticeSum; 4],
    norm: f64,
}

impl GKPWigner {
    pub fn bloch(&self) -> Bloch4 {
        self.bloch
    }

    pub fn terms(&self) -> &[LatticeSum; 4] {
        &self.terms
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn spike_cov(&self) -> Matrix2<f64> {
        self.terms[0].spike_cov()
    }

    pub fn envelope(&self) -> Option<&Gaussian2D> {
        self.terms[0].envelope()
    }

    pub fn is_comb(&self) -> bool {
        self.terms[0].is_comb()
    }

    /// The carriers scaled by `r_mu / norm`, skipping zero coefficients; a
    /// plain sum of these is the full Wigner function.
    pub fn weighted_terms(&self) -> Vec<LatticeSum> {
        let mut out = Vec::new();
        for mu in PauliIndex::ALL {
            let r = self.bloch.r(mu);
            if r != 0.0 {
                out.push(self.terms[mu.index()].scaled(Complex64::new(r / self.norm, 0.0)));
            }
        }
        out
    }

    /// Pointwise value (spiky objects only; combs refuse).
    pub fn eval(&self, x: Vector2<f64>, rel_tol: f64) -> Result<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for mu in PauliIndex::ALL {
            let r = self.bloch.r(mu);
            if r != 0.0 {
                acc += r * self.terms[mu.index()].eval(x, rel_tol)?;
            }
        }
        Ok(acc.re / self.norm)
    }

    /// Sample on a grid. Normalized states (those carrying an envelope) are
    /// additionally held to the Wigner magnitude bound `|W| <= 1/pi`.
    pub fn sample(&self, window: Rect, n_q: usize, n_p: usize, rel_tol: f64) -> Result<Field2D> {
        let field = sample_field(&self.weighted_terms(), window, n_q, n_p, rel_tol)?;
        if self.envelope().is_some() {
            let bound = std::f64::consts::FRAC_1_PI * (1.0 + WIGNER_BOUND_TOL);
            let peak = field.max_abs();
            if peak > bound {
                return Err(Error::WignerBound(peak));
            }
        }
        Ok(field)
    }

    /// Exact integral over the whole plane (normalized states only): each
    /// enveloped spike contributes its Gaussian-product mass, and the sum of
    /// those is a theta constant at the combined covariance
    /// `Sigma_env + Sigma_spike`.
    pub fn total_mass(&self, rel_tol: f64) -> Result<f64> {
        let env = self.envelope().ok_or_else(|| {
            Error::InvalidInput("total mass undefined for unnormalizable (envelope-free) objects".into())
        })?;
        if env.mean() != Vector2::zeros() {
            return Err(Error::InvalidInput(
                "total mass implemented for origin-centred envelopes".into(),
            ));
        }
        let combined = env.cov() + self.spike_cov();
        let mut acc = Complex64::new(0.0, 0.0);
        for mu in PauliIndex::ALL {
            let r = self.bloch.r(mu);
            if r != 0.0 {
                let constant = LatticeSum::theta(
                    self.terms[mu.index()].lattice(),
                    self.terms[mu.index()].chars(),
                    combined,
                )?
                .eval(Vector2::zeros(), rel_tol)?;
                acc += r * constant;
            }
        }
        Ok(acc.re / self.norm)
    }

    /// Exact integral over an axis-aligned rectangle (normalized states with
    /// axis-aligned covariances): sums the boxed mass of every enveloped spike.
    ///
    /// Used to validate grid integration: the midpoint-rule integral of a
    /// sampled state over its window should match this to grid accuracy.
    pub fn boxed_mass(&self, rect: Rect, rel_tol: f64) -> Result<f64> {
        let env = self.envelope().ok_or_else(|| {
            Error::InvalidInput("boxed mass undefined for unnormalizable (envelope-free) objects".into())
        })?;
        rect.validate()?;
        let se = env.cov();
        let ss = self.spike_cov();
        if se[(0, 1)].abs() > 1e-12 * se.norm() || ss[(0, 1)].abs() > 1e-12 * ss.norm().max(1e-300) {
            return Err(Error::InvalidInput(
                "boxed mass implemented for axis-aligned (diagonal) covariances".into(),
            ));
        }
        if !(ss[(0, 0)] > 0.0) || !(ss[(1, 1)] > 0.0) {
            return Err(Error::InvalidInput(
                "boxed mass needs broadened spikes (positive spike covariance)".into(),
            ));
        }
        if env.mean() != Vector2::zeros() {
            return Err(Error::InvalidInput(
                "boxed mass implemented for origin-centred envelopes".into(),
            ));
        }
        // Product of envelope and spike Gaussians at spike site x_n:
        //   G_se(x) G_ss(x - x_n) = G_{se+ss}(x_n) * G_sc(x - m_n),
        //   sc = (se^{-1} + ss^{-1})^{-1},  m_n = sc ss^{-1} x_n,
        // all diagonal here, so the box integral factorizes per axis.
        let sc = [
            1.0 / (1.0 / se[(0, 0)] + 1.0 / ss[(0, 0)]),
            1.0 / (1.0 / se[(1, 1)] + 1.0 / ss[(1, 1)]),
        ];
        let shrink = [sc[0] / ss[(0, 0)], sc[1] / ss[(1, 1)]];
        let combined = se + ss;

        let mut total = crate::plane::Kahan::new();
        for mu in PauliIndex::ALL {
            let r = self.bloch.r(mu);
            if r == 0.0 {
                continue;
            }
            let term = &self.terms[mu.index()];
            // Enumerate spikes wherever the combined weight is non-negligible.
            let sigma_max = combined[(0, 0)].max(combined[(1, 1)]).sqrt();
            let reach = 9.0 * sigma_max
                + rect.q_max.abs().max(rect.q_min.abs()).max(rect.p_max.abs()).max(rect.p_min.abs());
            let window = Rect::centered(reach);
            let comb = LatticeSum::comb(term.lattice(), term.chars())?;
            for (x_n, w) in comb.sha_support(window)? {
                let weight = w.re * gauss1(combined[(0, 0)], x_n[0]) * gauss1(combined[(1, 1)], x_n[1]);
                if weight.abs() < 1e-300 {
                    continue;
                }
                let m = [shrink[0] * x_n[0], shrink[1] * x_n[1]];
                let mass_q = gauss_mass_1d(sc[0], m[0], rect.q_min, rect.q_max, rel_tol);
                let mass_p = gauss_mass_1d(sc[1], m[1], rect.p_min, rect.p_max, rel_tol);
                total.add(r * weight * mass_q * mass_p);
            }
        }
        Ok(total.value() / self.norm)
    }

    /// Radius beyond which the state is negligible (envelope-based).
    fn reach(&self) -> Option<f64> {
        let env = self.envelope()?;
        let (_, hi) = sym_eigenvalues(&(env.cov() + self.spike_cov()));
        Some(env.mean().norm() + 9.0 * hi.sqrt())
    }
}

impl WignerFn for GKPWigner {
    fn eval_point(&self, x: Vector2<f64>) -> f64 {
        self.eval(x, DEFAULT_REL_TOL).unwrap_or(f64::NAN)
    }

    fn support_radius(&self) -> Option<f64> {
        self.reach()
    }
}

/// 1-D normalized Gaussian density with variance `s2`.
fn gauss1(s2: f64, y: f64) -> f64 {
    (-0.5 * y * y / s2).exp() / (std::f64::consts::TAU * s2).sqrt()
}

/// Mass of a 1-D Gaussian (variance `s2`, mean `mu`) over `[a, b]`, by
/// adaptive Simpson quadrature — accurate to ~`rel_tol` without special
/// functions.
pub(crate) fn gauss_mass_1d(s2: f64, mu: f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let sigma = s2.sqrt();
    // Clip the integration range to where the density carries mass; the
    // 12-sigma tails hold less than e^{-72} of it.
    let lo = a.max(mu - 12.0 * sigma);
    let hi = b.min(mu + 12.0 * sigma);
    if lo >= hi {
        return 0.0;
    }
    let f = |x: f64| gauss1(s2, x - mu);
    let tol = rel_tol.max(1e-14);
    // Integrate the two sides of the peak separately so the density maximum
    // always sits on a stencil endpoint. On a clipped, off-center interval the
    // whole spike can fall between the five points of the first Simpson
    // stencil, and the error estimate would then certify a near-zero result.
    let mid = mu.clamp(lo, hi);
    let mut mass = 0.0;
    if mid > lo {
        mass += adaptive_simpson(&f, lo, mid, 0.5 * tol, 40);
    }
    if hi > mid {
        mass += adaptive_simpson(&f, mid, hi, 0.5 * tol, 40);
    }
    mass
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol.abs().max(1e-300), depth)
}

/// Ideal (infinite-energy) encoded operator: delta combs, `norm = 2`.
pub fn ideal_state_wigner(bloch: Bloch4) -> Result<GKPWigner> {
    bloch.ensure_state()?;
    let zero = Matrix2::zeros();
    let terms = [
        pauli_wigner(PauliIndex::I, zero, None)?,
        pauli_wigner(PauliIndex::X, zero, None)?,
        pauli_wigner(PauliIndex::Y, zero, None)?,
        pauli_wigner(PauliIndex::Z, zero, None)?,
    ];
    Ok(GKPWigner { bloch, terms, norm: 2.0 })
}

/// Finite-energy encoded state at the minimum envelope of the given noise:
/// spikes `Sigma_spike`, envelope `Sigma_env`, total integral 1.
pub fn approx_state_wigner(bloch: Bloch4, noise: &NoiseSpec) -> Result<GKPWigner> {
    bloch.ensure_state()?;
    noise.ensure_low_noise()?;
    let spike = noise.spike_cov();
    let env_cov = noise.env_cov();
    let norm = wigner_normalization(&bloch, &env_cov, &spike)?;
    if !(norm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "normalization sum is not positive ({norm:.3e}); Bloch vector outside the state set"
        )));
    }
    let envelope = Gaussian2D::new(Vector2::zeros(), env_cov)?;
    let terms = [
        pauli_wigner(PauliIndex::I, spike, Some(envelope.clone()))?,
        pauli_wigner(PauliIndex::X, spike, Some(envelope.clone()))?,
        pauli_wigner(PauliIndex::Y, spike, Some(envelope.clone()))?,
        pauli_wigner(PauliIndex::Z, spike, Some(envelope))?,
    ];
    Ok(GKPWigner { bloch, terms, norm })
}

/// The smallest physical envelope for a given spike covariance:
/// `Sigma_spike / det(2 Sigma_spike)`. Involution: applying it twice returns
/// the input.
pub fn min_envelope(sigma_spike: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    check_symmetric(sigma_spike, "spike covariance")?;
    let (lo, _) = sym_eigenvalues(sigma_spike);
    if !(lo > 0.0) {
        return Err(Error::InvalidInput(format!(
            "minimum envelope needs a positive-definite spike covariance (eigenvalue {lo:.3e})"
        )));
    }
    Ok(sigma_spike / (4.0 * sigma_spike.determinant()))
}

/// Normalization constant of a finite-energy state: the Bloch-weighted sum of
/// theta constants at the combined covariance,
/// `N = sum_mu r_mu theta_{sqrt(pi) I}[mu](0, 2 pi i (Sigma_env + Sigma_spike))`.
///
/// Dividing the raw Pauli-comb sum by `N` makes the total integral exactly one.
/// The spike contribution to the constant is `O(e^{-2 pi c})` relative — far
/// below 1e-10 for any low-noise state — so this agrees with the envelope-only
/// theta-constant sum, and approaches `1/sqrt(pi)` as the noise vanishes.
pub fn wigner_normalization(
    bloch: &Bloch4,
    sigma_env: &Matrix2<f64>,
    sigma_spike: &Matrix2<f64>,
) -> Result<f64> {
    check_symmetric(sigma_env, "envelope covariance")?;
    check_symmetric(sigma_spike, "spike covariance")?;
    let combined = sigma_env + sigma_spike;
    let mut acc = Complex64::new(0.0, 0.0);
    for mu in PauliIndex::ALL {
        let r = bloch.r(mu);
        if r != 0.0 {
            let comb = pauli_wigner(mu, combined, None)?;
            acc += r * comb.eval(Vector2::zeros(), DEFAULT_REL_TOL)?;
        }
    }
    Ok(acc.re)
}

/// Classification of a candidate envelope against the minimum envelope of its
/// spike covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeClass {
    /// Exactly the minimal envelope: a pure embedded-error state.
    PhysicalMinimum,
    /// Wider than minimal: a classical mixture of minimal-envelope states.
    PhysicalMixed,
    /// Below the minimal envelope somewhere: no quantum state has it.
    Unphysical,
}

/// Classify a Gaussian-mixture envelope `sum_i w_i G_{cov_i}` against
/// `Sigma_env_min`.
///
/// Deconvolving the minimal envelope subtracts `Sigma_env_min` from every
/// component covariance. If any component goes negative-definite the mixture
/// demands negative deconvolved mass — Unphysical; if every component lands on
/// (numerically) zero covariance the remainder is a point mass — the exact
/// minimum; otherwise a genuine positive distribution remains — a mixture.
pub fn check_envelope_mixture(
    components: &[(f64, Gaussian2D)],
    sigma_env_min: &Matrix2<f64>,
) -> Result<EnvelopeClass> {
    if components.is_empty() {
        return Err(Error::InvalidInput("empty envelope mixture".into()));
    }
    check_symmetric(sigma_env_min, "minimal envelope")?;
    let scale = sigma_env_min.norm().max(1.0);
    let mut all_minimal = true;
    for (w, g) in components {
        if !(*w > 0.0) {
            return Err(Error::InvalidInput(format!(
                "mixture weights must be positive, got {w}"
            )));
        }
        let residual = symmetrize(&(g.cov() - sigma_env_min));
        let (lo, _) = sym_eigenvalues(&residual);
        if lo < -MIN_ENV_TOL * scale {
            return Ok(EnvelopeClass::Unphysical);
        }
        if residual.norm() > MIN_ENV_TOL * scale {
            all_minimal = false;
        }
    }
    Ok(if all_minimal { EnvelopeClass::PhysicalMinimum } else { EnvelopeClass::PhysicalMixed })
}

/// Classify a gridded envelope by Fourier deconvolution of the minimal one.
///
/// Writing the candidate as `remainder * G_{Sigma_env_min}` (`*` = convolution),
/// the ratio of characteristic functions
///
/// ```text
/// |r_hat(k)| / r_hat(0) = |F(k)| e^{+ k' Sigma_env_min k / 2} / F(0)
/// ```
///
/// is estimated directly on the spectrum `F` of the field, over the band of
/// modes whose measured amplitude stands clear of truncation and roundoff
/// (`|F| >= 1e-6 F(0)`; the amplification there is at most `e^{13.8}` and every
/// retained mode keeps its full significance). Bochner's theorem then decides:
///
/// * some mode exceeds the zero mode — impossible for any nonnegative
///   remainder — Unphysical;
/// * the ratio stays flat across the whole band — the remainder is a point
///   mass and the candidate is the exact minimum;
/// * the ratio decays — a genuinely spread nonnegative remainder, a mixture.
///
/// Working purely in the spectral domain avoids inverting a band-limited
/// spectrum, whose ringing would forge negative lobes on perfectly valid
/// inputs. The flatness threshold resolves remainder covariances down to
/// about `1e-3` of the envelope scale; tighter claims need the analytic
/// [`check_envelope_mixture`] route.
///
/// The field must decay below `1e-10` of its peak before the window boundary;
/// a truncated tail leaks broadband error into exactly the faint modes the
/// deconvolution amplifies, so such fields are refused as uncertifiable
/// rather than misread.
pub fn check_envelope_field(field: &Field2D, sigma_env_min: &Matrix2<f64>) -> Result<EnvelopeClass> {
    check_symmetric(sigma_env_min, "minimal envelope")?;
    let (lo, hi) = sym_eigenvalues(sigma_env_min);
    if !(lo > 0.0) {
        return Err(Error::InvalidInput(
            "minimal envelope must be positive definite".into(),
        ));
    }
    let (n_q, n_p) = (field.n_q(), field.n_p());
    if n_q < 16 || n_p < 16 {
        return Err(Error::InvalidInput("envelope grid too small to analyze".into()));
    }
    let cell = field.dq().max(field.dp());
    if cell > lo.sqrt() / 8.0 {
        return Err(Error::InvalidInput(format!(
            "grid too coarse to certify against the minimal envelope \
             (cell {cell:.3} vs envelope sigma {:.3})",
            lo.sqrt()
        )));
    }
    let half_q = 0.5 * field.window().width_q();
    let half_p = 0.5 * field.window().width_p();
    if half_q < 5.0 * hi.sqrt() || half_p < 5.0 * hi.sqrt() {
        return Err(Error::WindowCoverage(format!(
            "window half-width ({half_q:.2}, {half_p:.2}) below 5 envelope sigmas ({:.2})",
            5.0 * hi.sqrt()
        )));
    }
    let peak = field.max_abs();
    if peak == 0.0 {
        return Err(Error::InvalidInput("envelope field is identically zero".into()));
    }
    // A tail cut at the window boundary smears broadband error across the
    // spectrum, right where the faint modes live; refuse instead of misread.
    const BOUNDARY_TOL: f64 = 1e-10;
    let mut edge = 0.0f64;
    for iq in 0..n_q {
        edge = edge.max(field.get(iq, 0).abs()).max(field.get(iq, n_p - 1).abs());
    }
    for ip in 0..n_p {
        edge = edge.max(field.get(0, ip).abs()).max(field.get(n_q - 1, ip).abs());
    }
    if edge > BOUNDARY_TOL * peak {
        return Err(Error::WindowCoverage(format!(
            "field still at {:.1e} of its peak on the window boundary; \
             enlarge the window until it decays below {BOUNDARY_TOL:.0e}",
            edge / peak
        )));
    }

    // Forward transform, separable direct DFT (cell-centered abscissae).
    let kq: Vec<f64> = (0..n_q)
        .map(|m| std::f64::consts::TAU * (m as f64 - n_q as f64 / 2.0) / field.window().width_q())
        .collect();
    let kp: Vec<f64> = (0..n_p)
        .map(|m| std::f64::consts::TAU * (m as f64 - n_p as f64 / 2.0) / field.window().width_p())
        .collect();
    let dq_mat = dft_matrix(&kq, (0..n_q).map(|j| field.q_at(j)).collect::<Vec<_>>().as_slice());
    let dp_mat = dft_matrix(&kp, (0..n_p).map(|j| field.p_at(j)).collect::<Vec<_>>().as_slice());
    let vals = DMatrix::<Complex64>::from_fn(n_p, n_q, |i, j| {
        Complex64::new(field.get(j, i), 0.0)
    });
    let spectrum = (&dp_mat * vals * dq_mat.transpose()).scale(field.cell_area());

    let f_zero = spectrum[(n_p / 2, n_q / 2)].norm();
    if f_zero == 0.0 {
        return Err(Error::InvalidInput("envelope field has zero mean".into()));
    }

    const AMP_BAND: f64 = 1e-6;
    const GUARD_EXPONENT: f64 = 40.0;
    const OVERSHOOT: f64 = 3e-3;
    const FLAT_DROP: f64 = 0.02;

    let mut worst_over = 0.0f64;
    let mut worst_drop = 0.0f64;
    for ip in 0..n_p {
        for iq in 0..n_q {
            if ip == n_p / 2 && iq == n_q / 2 {
                continue;
            }
            let f = spectrum[(ip, iq)].norm();
            if f <= AMP_BAND * f_zero {
                continue;
            }
            let k = Vector2::new(kq[iq], kp[ip]);
            let gain = 0.5 * (k.transpose() * sigma_env_min * k)[(0, 0)];
            if gain > GUARD_EXPONENT {
                return Err(Error::DynamicRangeGuard {
                    k1: iq as i64 - n_q as i64 / 2,
                    k2: ip as i64 - n_p as i64 / 2,
                    log_gain: gain,
                    amplitude: f,
                });
            }
            // log of |r_hat(k)| / r_hat(0), zero for a point-mass remainder.
            let l = (f / f_zero).ln() + gain;
            worst_over = worst_over.max(l);
            worst_drop = worst_drop.min(l);
        }
    }
    if worst_over > OVERSHOOT {
        return Ok(EnvelopeClass::Unphysical);
    }
    Ok(if worst_drop < -FLAT_DROP {
        EnvelopeClass::PhysicalMixed
    } else {
        EnvelopeClass::PhysicalMinimum
    })
}

fn dft_matrix(ks: &[f64], xs: &[f64]) -> DMatrix<Complex64> {
    DMatrix::from_fn(ks.len(), xs.len(), |m, j| {
        let phase = -ks[m] * xs[j];
        Complex64::new(phase.cos(), phase.sin())
    })
}

/// Basis of a wavefunction evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Position,
    Momentum,
}

/// Pauli-eigenstate labels that have single-comb wavefunctions in the
/// position/momentum quadratures. The Y eigenstates only reduce to a single
/// comb in a rotated quadrature and are handled in phase space instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    Zero,
    One,
    Plus,
    Minus,
}

/// Normalized approximate-GKP wavefunction at quadrature value `s`:
///
/// ```text
/// psi(s) = sqrt(4 pi) sqrt(Delta/kappa) G_{1/kappa^2}(s) theta_T[v1, v2](s, 2 pi i Delta^2)
/// ```
///
/// in position basis (Delta and kappa swap roles in momentum basis), with the
/// comb period and characteristics of the requested eigenstate: computational
/// states live on period `2 sqrt(pi)` in position, X eigenstates on
/// `sqrt(pi)`, and the roles reverse in momentum. The prefactor makes
/// `integral |psi|^2 = 1` up to `O(kappa Delta)` corrections.
pub fn wavefunction_eval(
    label: StateLabel,
    noise: &NoiseSpec,
    s: f64,
    basis: Basis,
) -> Result<f64> {
    noise.ensure_low_noise()?;
    if noise.phi() != 0.0 {
        return Err(Error::InvalidInput(
            "wavefunctions are defined for unrotated (phi = 0) noise".into(),
        ));
    }
    let zero = Rational64::new(0, 1);
    let half = Rational64::new(1, 2);
    let two_rt = 2.0 * SQRT_PI;
    // (period, v1, v2) per eigenstate and basis.
    let (t, v1, v2, spike_var, env_var) = match basis {
        Basis::Position => {
            let (t, v1, v2) = match label {
                StateLabel::Zero => (two_rt, zero, zero),
                StateLabel::One => (two_rt, zero, half),
                StateLabel::Plus => (SQRT_PI, zero, zero),
                StateLabel::Minus => (SQRT_PI, half, zero),
            };
            (t, v1, v2, noise.delta2(), 1.0 / noise.kappa2())
        }
        Basis::Momentum => {
            let (t, v1, v2) = match label {
                StateLabel::Zero => (SQRT_PI, zero, zero),
                StateLabel::One => (SQRT_PI, half, zero),
                StateLabel::Plus => (two_rt, zero, zero),
                StateLabel::Minus => (two_rt, zero, half),
            };
            (t, v1, v2, noise.kappa2(), 1.0 / noise.delta2())
        }
    };
    let tau = Complex64::new(0.0, std::f64::consts::TAU * spike_var);
    let comb = crate::theta::Theta1DSpec::new(t, v1, v2, tau)?
        .eval(Complex64::new(s, 0.0), DEFAULT_REL_TOL)?;
    debug_assert!(comb.im.abs() <= 1e-12 * comb.re.abs().max(1e-300));
    let envelope = (-0.5 * s * s / env_var).exp() / (std::f64::consts::TAU * env_var).sqrt();
    let ratio = (spike_var / (1.0 / env_var)).sqrt();
    let prefactor = (4.0 * std::f64::consts::PI).sqrt() * ratio.sqrt();
    Ok(prefactor * envelope * comb.re)
}

/// Gaussian random displacement channel: every carrier is convolved with
/// `G_Sigma`, broadening spikes and envelope alike; normalized inputs are
/// renormalized so the output still integrates to one.
///
/// The output envelope is wider than the minimum for its (also wider) spikes,
/// so the result classifies as Physical-Mixed — displacement noise turns a
/// pure embedded-error state into a mixture.
pub fn displacement_channel(state: &GKPWigner, sigma: &Matrix2<f64>) -> Result<GKPWigner> {
    check_symmetric(sigma, "displacement covariance")?;
    let (lo, _) = sym_eigenvalues(sigma);
    if lo < -1e-12 * sigma.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "displacement covariance has negative eigenvalue {lo:.3e}"
        )));
    }
    let spike = symmetrize(&(state.spike_cov() + sigma));
    let (envelope, norm) = match state.envelope() {
        Some(env) => {
            let env_cov = symmetrize(&(env.cov() + sigma));
            let norm = wigner_normalization(&state.bloch, &env_cov, &spike)?;
            (Some(Gaussian2D::new(env.mean(), env_cov)?), norm)
        }
        None => (None, state.norm),
    };
    let terms = [
        pauli_wigner(PauliIndex::I, spike, envelope.clone())?,
        pauli_wigner(PauliIndex::X, spike, envelope.clone())?,
        pauli_wigner(PauliIndex::Y, spike, envelope.clone())?,
        pauli_wigner(PauliIndex::Z, spike, envelope)?,
    ];
    Ok(GKPWigner { bloch: state.bloch, terms, norm })
}

/// Random stabilizer shifts (multiples of `2 sqrt(pi)`) average the envelope
/// into a period-`2 sqrt(pi)` comb, which in the high-quality limit is flat to
/// better than 1%; the state becomes the envelope-free blurred-ideal object
/// with the same spikes and Bloch vector.
///
/// Ideal (already envelope-free) inputs pass through unchanged.
pub fn stabilizer_twirl(state: &GKPWigner) -> Result<GKPWigner> {
    let Some(env) = state.envelope() else {
        return Ok(state.clone());
    };
    // Flatness of the envelope comb theta_{2 sqrt(pi) I}(x, 2 pi i Sigma_env)
    // over one unit cell, probed on a 5x5 grid.
    let comb = LatticeSum::theta(
        Matrix2::identity() * (2.0 * SQRT_PI),
        Characteristics::zero(),
        env.cov(),
    )?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..5 {
        for j in 0..5 {
            let x = Vector2::new(
                (i as f64 / 5.0) * 2.0 * SQRT_PI,
                (j as f64 / 5.0) * 2.0 * SQRT_PI,
            );
            let v = comb.eval(x, DEFAULT_REL_TOL)?.re;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let flatness = (hi - lo) / hi;
    const FLATNESS_LIMIT: f64 = 0.01;
    if !(flatness <= FLATNESS_LIMIT) {
        return Err(Error::TwirlNotFlat(flatness, FLATNESS_LIMIT));
    }
    let spike = state.spike_cov();
    let terms = [
        pauli_wigner(PauliIndex::I, spike, None)?,
        pauli_wigner(PauliIndex::X, spike, None)?,
        pauli_wigner(PauliIndex::Y, spike, None)?,
        pauli_wigner(PauliIndex::Z, spike, None)?,
    ];
    Ok(GKPWigner { bloch: state.bloch, terms, norm: 2.0 })
}

/// Bloch components of any pointwise-evaluable Wigner function, by exact
/// overlap with the four ideal Pauli combs:
/// `r_mu = 2 pi sum_n w_n^(mu) W(x_n)` over the comb support.
///
/// The object must know its support radius (grids use their window; analytic
/// states their envelope). Returned normalized to `r0 = 1`; fails if the
/// identity overlap is non-positive.
pub fn bloch_from_wigner<W: WignerFn + ?Sized>(w: &W) -> Result<Bloch4> {
    let radius = w.support_radius().ok_or_else(|| {
        Error::WindowCoverage("input has unbounded support; wrap it with an explicit radius".into())
    })?;
    bloch_from_wigner_shifted(w, Vector2::zeros(), radius)
}

/// As [`bloch_from_wigner`], with the input evaluated at `x + shift` — the
/// overlap form used by error correction, where the syndrome displaces the
/// input against the code combs.
pub fn bloch_from_wigner_shifted<W: WignerFn + ?Sized>(
    w: &W,
    shift: Vector2<f64>,
    radius: f64,
) -> Result<Bloch4> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("support radius {radius} invalid")));
    }
    let window = Rect::centered(radius + SQRT_PI);
    let mut r = [0.0f64; 4];
    for mu in PauliIndex::ALL {
        let comb = pauli_wigner(mu, Matrix2::zeros(), None)?;
        let mut acc = crate::plane::Kahan::new();
        for (x_n, weight) in comb.sha_support(window)? {
            debug_assert!(weight.im == 0.0);
            acc.add(weight.re * w.eval_point(x_n + shift));
        }
        r[mu.index()] = TRACE_FACTOR * acc.value();
    }
    if !(r[0] > 0.0) {
        return Err(Error::InvalidInput(format!(
            "identity overlap r0 = {:.3e} is not positive; no state on this branch",
            r[0]
        )));
    }
    Bloch4::new(r).normalized()
}
