//! Phase-space GKP error correction: syndrome decoding, single-quadrature
//! rakes, the two-quadrature EC map, ideal-ancilla projection, and
//! teleportation-based EC.
//!
//! A quadrature measurement against a GKP ancilla acts on the data Wigner
//! function as a *rake*: a pointwise product with the ancilla comb along the
//! measured quadrature together with a convolution along the conjugate one
//! (the measurement back-action),
//!
//! ```text
//! q-rake:  out(q, p) = integral  W_plus(q, w) W_in(q, p - w) dw
//! p-rake:  out(q, p) = integral  W_zero(w, p) W_in(q + w, p) dw
//! ```
//!
//! Raking in q with a `|+>`-quality ancilla multiplies every data spike by the
//! ancilla teeth — the spike variance contracts harmonically,
//! `v -> v a / (v + a)` — while the p variance grows by `a`. Composing the two
//! rakes realigns both quadratures; iterating drives the spike variances to
//! the golden-ratio fixed point `(phi a, a / phi)` with `phi = (1 + sqrt 5)/2`.
//!
//! The teleportation route (input Bell-measured against one half of a GKP
//! Bell pair) gives the same channel: eliminating the homodyne integrals of
//! the three-mode picture by substitution shows the output equals the q-rake
//! followed by the p-rake of the input shifted by `sqrt(2) m`. Both
//! derivations are implemented here — [`ec_map`] composes rakes on the grid,
//! [`three_mode_teleport_trace`] performs the three-mode integrals directly —
//! and agreeing to grid accuracy is one of the strongest end-to-end checks in
//! the crate.

use nalgebra::{DMatrix, Vector2};
use num_rational::Rational64;
use rayon::prelude::*;

use crate::plane::{sym_eigenvalues, Field2D, WignerFn};
use crate::states::{
    approx_state_wigner, bloch_from_wigner_shifted, Bloch4, GKPWigner, NoiseSpec,
};
use crate::theta::LatticeSum;
use crate::{Error, Result, DEFAULT_REL_TOL, SQRT_PI};

/// Outcomes with (unnormalized) weight below this are treated as impossible.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Rendering blur used when an ideal-ancilla output must be returned as a
/// finite grid: the comb is dressed as a minimum-envelope state at this
/// symmetric noise.
pub const IDEAL_RENDER_BETA: f64 = 0.01;

/// A two-quadrature syndrome split into its nearest lattice translation and
/// the remainder: `m = nearest + rem`, `nearest` an integer multiple of
/// `sqrt(pi)`, `rem` in `[-sqrt(pi)/2, sqrt(pi)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Syndrome {
    m_q: f64,
    m_p: f64,
    nearest_q: f64,
    nearest_p: f64,
    rem_q: f64,
    rem_p: f64,
}

fn nearest_step(m: f64) -> f64 {
    SQRT_PI * (m / SQRT_PI + 0.5).floor()
}

/// Split measured syndrome values into nearest `sqrt(pi)` multiples and
/// remainders.
pub fn decode_syndrome(m_q: f64, m_p: f64) -> Result<Syndrome> {
    if !m_q.is_finite() || !m_p.is_finite() {
        return Err(Error::InvalidInput(format!(
            "syndrome values must be finite, got ({m_q}, {m_p})"
        )));
    }
    let nearest_q = nearest_step(m_q);
    let nearest_p = nearest_step(m_p);
    Ok(Syndrome {
        m_q,
        m_p,
        nearest_q,
        nearest_p,
        rem_q: m_q - nearest_q,
        rem_p: m_p - nearest_p,
    })
}

impl Syndrome {
    pub fn m_q(&self) -> f64 {
        self.m_q
    }

    pub fn m_p(&self) -> f64 {
        self.m_p
    }

    pub fn nearest_q(&self) -> f64 {
        self.nearest_q
    }

    pub fn nearest_p(&self) -> f64 {
        self.nearest_p
    }

    pub fn rem_q(&self) -> f64 {
        self.rem_q
    }

    pub fn rem_p(&self) -> f64 {
        self.rem_p
    }

    pub fn m_vec(&self) -> Vector2<f64> {
        Vector2::new(self.m_q, self.m_p)
    }

    pub fn nearest_vec(&self) -> Vector2<f64> {
        Vector2::new(self.nearest_q, self.nearest_p)
    }
}

/// Ancilla resource for error correction.
///
/// Approximate ancillae must carry symmetric noise (`Delta^2 = kappa^2`,
/// unrotated) so that the Fourier transform maps the `|0>`-quality ancilla
/// onto the `|+>`-quality one with identical covariances — the property that
/// lets one resource serve both quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AncillaSpec {
    Ideal,
    Approximate(NoiseSpec),
}

impl AncillaSpec {
    pub fn approximate(noise: NoiseSpec) -> Result<Self> {
        if !noise.is_symmetric() || noise.phi() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "ancilla noise must be symmetric and unrotated \
                 (Delta^2 = {}, kappa^2 = {}, phi = {})",
                noise.delta2(),
                noise.kappa2(),
                noise.phi()
            )));
        }
        noise.ensure_low_noise()?;
        Ok(AncillaSpec::Approximate(noise))
    }

    pub fn noise(&self) -> Option<&NoiseSpec> {
        match self {
            AncillaSpec::Ideal => None,
            AncillaSpec::Approximate(n) => Some(n),
        }
    }

    /// The `|+>`-quality ancilla state (q-rake resource).
    pub fn plus_state(&self) -> Result<GKPWigner> {
        match self {
            AncillaSpec::Ideal => Err(Error::InvalidInput(
                "ideal ancillae have no pointwise Wigner function; use the projection path".into(),
            )),
            AncillaSpec::Approximate(noise) => {
                approx_state_wigner(Bloch4::logical(1.0, 0.0, 0.0), noise)
            }
        }
    }

    /// The `|0>`-quality ancilla state (p-rake resource).
    pub fn zero_state(&self) -> Result<GKPWigner> {
        match self {
            AncillaSpec::Ideal => Err(Error::InvalidInput(
                "ideal ancillae have no pointwise Wigner function; use the projection path".into(),
            )),
            AncillaSpec::Approximate(noise) => {
                approx_state_wigner(Bloch4::logical(0.0, 0.0, 1.0), noise)
            }
        }
    }
}

/// Which quadrature a rake sharpens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Q,
    P,
}

/// Order of the two rakes inside [`ec_map`]. The rakes do not commute: each
/// one's back-action blurs the conjugate quadrature, so the axis measured
/// last comes out sharper and the two orders produce mirrored spike shapes.
/// The logical content of the output and the aligned-outcome weight agree to
/// second order in the noise; outcome weights at large remainders do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RakeOrder {
    QThenP,
    PThenQ,
}

/// Apply a single-carrier rake to a gridded Wigner function.
///
/// `axis = Q`: pointwise product in q, discrete convolution along p with the
/// kernel `W_anc(q_i, k dp)` sampled analytically at whole-cell offsets;
/// `axis = P`: the mirrored form. Open boundary: data outside the window is
/// treated as zero. The ancilla term must have broadened spikes — delta combs
/// have no pointwise values to sample.
///
/// The full ancilla state is a sum of carriers; rake it by linearity
/// ([`rake_state`]) or term by term.
pub fn rake(w_in: &Field2D, ancilla_term: &LatticeSum, axis: Axis) -> Result<Field2D> {
    let (lo, _) = sym_eigenvalues(&ancilla_term.spike_cov());
    if !(lo > 0.0) {
        return Err(Error::InvalidInput(
            "delta-comb ancilla cannot be sampled on a grid; use the ideal projection path".into(),
        ));
    }
    let (n_q, n_p) = (w_in.n_q(), w_in.n_p());
    let (dq, dp) = (w_in.dq(), w_in.dp());

    // Kernel reach along the convolution direction: the ancilla envelope (if
    // any) bounds it; otherwise span the whole window.
    let reach_cells = |step: f64, n: usize| -> usize {
        match ancilla_term.envelope() {
            Some(env) => {
                let (_, hi) = sym_eigenvalues(&(env.cov() + ancilla_term.spike_cov()));
                let reach = env.mean().norm() + 8.3 * hi.sqrt() + SQRT_PI;
                ((reach / step).ceil() as usize).min(n.saturating_sub(1))
            }
            None => n.saturating_sub(1),
        }
    };

    let mut out = Field2D::zeros(w_in.window(), n_q, n_p)?;
    match axis {
        Axis::Q => {
            let k_max = reach_cells(dp, n_p) as i64;
            // out(q_i, p_j) = dp * sum_k W_anc(q_i, k dp) * W_in(q_i, p_{j-k})
            let columns: Vec<Result<(usize, Vec<f64>)>> = (0..n_q)
                .into_par_iter()
                .map(|i| {
                    let q = w_in.q_at(i);
                    let mut kernel = Vec::with_capacity((2 * k_max + 1) as usize);
                    for k in -k_max..=k_max {
                        let v = ancilla_term
                            .eval(Vector2::new(q, k as f64 * dp), DEFAULT_REL_TOL)?;
                        kernel.push(v.re);
                    }
                    let mut col = vec![0.0f64; n_p];
                    for (j, out_v) in col.iter_mut().enumerate() {
                        let mut acc = 0.0f64;
                        for (ki, kv) in kernel.iter().enumerate() {
                            let j_in = j as i64 - (ki as i64 - k_max);
                            if (0..n_p as i64).contains(&j_in) {
                                acc += kv * w_in.get(i, j_in as usize);
                            }
                        }
                        *out_v = dp * acc;
                    }
                    Ok((i, col))
                })
                .collect();
            for item in columns {
                let (i, col) = item?;
                for (j, v) in col.into_iter().enumerate() {
                    *out.values_mut().get_mut((j, i)).expect("rake index") = v;
                }
            }
        }
        Axis::P => {
            let k_max = reach_cells(dq, n_q) as i64;
            // out(q_i, p_j) = dq * sum_k W_anc(k dq, p_j) * W_in(q_{i+k}, p_j)
            let rows: Vec<Result<(usize, Vec<f64>)>> = (0..n_p)
                .into_par_iter()
                .map(|j| {
                    let p = w_in.p_at(j);
                    let mut kernel = Vec::with_capacity((2 * k_max + 1) as usize);
                    for k in -k_max..=k_max {
                        let v = ancilla_term
                            .eval(Vector2::new(k as f64 * dq, p), DEFAULT_REL_TOL)?;
                        kernel.push(v.re);
                    }
                    let mut row = vec![0.0f64; n_q];
                    for (i, out_v) in row.iter_mut().enumerate() {
                        let mut acc = 0.0f64;
                        for (ki, kv) in kernel.iter().enumerate() {
                            let i_in = i as i64 + (ki as i64 - k_max);
                            if (0..n_q as i64).contains(&i_in) {
                                acc += kv * w_in.get(i_in as usize, j);
                            }
                        }
                        *out_v = dq * acc;
                    }
                    Ok((j, row))
                })
                .collect();
            for item in rows {
                let (j, row) = item?;
                for (i, v) in row.into_iter().enumerate() {
                    *out.values_mut().get_mut((j, i)).expect("rake index") = v;
                }
            }
        }
    }
    Ok(out)
}

/// Rake with a full ancilla state by linearity over its weighted carriers.
pub fn rake_state(w_in: &Field2D, ancilla: &GKPWigner, axis: Axis) -> Result<Field2D> {
    let terms = ancilla.weighted_terms();
    if terms.is_empty() {
        return Err(Error::InvalidInput("ancilla state has no carriers".into()));
    }
    let mut acc: Option<Field2D> = None;
    for term in &terms {
        let part = rake(w_in, term, axis)?;
        acc = Some(match acc {
            None => part,
            Some(mut sum) => {
                for (a, b) in sum.values_mut().iter_mut().zip(part.values().iter()) {
                    *a += *b;
                }
                sum
            }
        });
    }
    Ok(acc.expect("at least one carrier"))
}

/// Full two-quadrature EC map with approximate ancillae.
///
/// Pipeline: translate the input by the measured syndrome, rake both
/// quadratures in the requested order, translate back by the decoded nearest
/// lattice shift, renormalize. The returned probability is the integral of
/// the unnormalized raked output — the density of this syndrome outcome
/// (it integrates to one over all outcomes for a normalized input).
pub fn ec_map(
    w_in: &Field2D,
    ancilla: &AncillaSpec,
    syndrome: &Syndrome,
    order: RakeOrder,
) -> Result<(Field2D, f64)> {
    if ancilla.noise().is_none() {
        return Err(Error::InvalidInput(
            "ec_map needs approximate ancillae; ideal ancillae are handled by ec_ideal".into(),
        ));
    }
    let plus = ancilla.plus_state()?;
    let zero = ancilla.zero_state()?;
    let shifted = w_in.translate(syndrome.m_vec());
    let raked = match order {
        RakeOrder::QThenP => {
            let mid = rake_state(&shifted, &plus, Axis::Q)?;
            rake_state(&mid, &zero, Axis::P)?
        }
        RakeOrder::PThenQ => {
            let mid = rake_state(&shifted, &zero, Axis::P)?;
            rake_state(&mid, &plus, Axis::Q)?
        }
    };
    let probability = raked.integrate();
    if !(probability > PROBABILITY_FLOOR) {
        return Err(Error::ProbabilityFloor(probability, PROBABILITY_FLOOR));
    }
    let mut corrected = raked.translate(syndrome.nearest_vec());
    let mass = corrected.integrate();
    if !(mass > PROBABILITY_FLOOR) {
        return Err(Error::ProbabilityFloor(mass, PROBABILITY_FLOOR));
    }
    corrected.scale(1.0 / mass);
    Ok((corrected, probability))
}

/// Ideal-ancilla EC: project onto the code subspace.
///
/// The output is fully characterized by the overlaps of the syndrome-shifted
/// input with the ideal Pauli combs,
/// `r_mu = 2 pi sum_n w_n^(mu) W_in(x_n + m)`, and is returned both as the
/// normalized Bloch vector and as the ideal encoded object
/// `(1/2) sum_mu r_mu W_mu`. Evaluating the input at the full (not just
/// fractional) shift automatically books the logical flips of the corrective
/// translation into the signs of `r_mu`.
pub fn ec_ideal<W: WignerFn + ?Sized>(w_in: &W, syndrome: &Syndrome) -> Result<(Bloch4, GKPWigner)> {
    let radius = w_in.support_radius().ok_or_else(|| {
        Error::WindowCoverage("input support unknown; provide a windowed or enveloped input".into())
    })?;
    let bloch = bloch_from_wigner_shifted(w_in, syndrome.m_vec(), radius)?;
    let state = crate::states::ideal_state_wigner(clamp_bloch(bloch))?;
    Ok((bloch, state))
}

/// Round tiny overshoots of `|r_vec|` above 1 (quadrature noise) back onto
/// the Bloch ball so the ideal-state constructor accepts the vector.
fn clamp_bloch(b: Bloch4) -> Bloch4 {
    let len = b.logical_norm();
    if len > 1.0 && len < 1.0 + 1e-6 {
        Bloch4::logical(b.r[1] / len, b.r[2] / len, b.r[3] / len)
    } else {
        b
    }
}

/// Teleportation-based EC / magic-state preparation.
///
/// The input is Bell-measured against one half of a GKP Bell pair; outcome
/// `m` enters the output through the scaled shift `sqrt(2) m` of the input
/// argument. Ideal ancillae reduce to the code projection on the shifted
/// input ([`ec_ideal`]); approximate ancillae run the raked pipeline
/// ([`ec_map`], q-then-p) with the syndrome decoded from `sqrt(2) m`.
///
/// Returns the output Bloch vector and a gridded output field. For ideal
/// ancillae the exact output is a delta comb, so the returned field is its
/// minimum-envelope dressing at symmetric noise [`IDEAL_RENDER_BETA`]
/// (documented rendering choice; the Bloch vector is exact).
pub fn teleport_ec(
    w_in: &Field2D,
    m: Vector2<f64>,
    ancilla: &AncillaSpec,
) -> Result<(Bloch4, Field2D)> {
    let shift = std::f64::consts::SQRT_2 * m;
    match ancilla {
        AncillaSpec::Ideal => {
            let syndrome = decode_syndrome(shift[0], shift[1])?;
            let (bloch, _ideal) = ec_ideal(w_in, &syndrome)?;
            let dressed = approx_state_wigner(
                clamp_bloch(bloch),
                &NoiseSpec::symmetric(IDEAL_RENDER_BETA)?,
            )?;
            let field = dressed.sample(w_in.window(), w_in.n_q(), w_in.n_p(), DEFAULT_REL_TOL)?;
            Ok((bloch, field))
        }
        AncillaSpec::Approximate(_) => {
            let syndrome = decode_syndrome(shift[0], shift[1])?;
            let (field, _probability) = ec_map(w_in, ancilla, &syndrome, RakeOrder::QThenP)?;
            let bloch = crate::states::bloch_from_wigner(&field)?;
            Ok((bloch, field))
        }
    }
}

/// Largest factorized-grid intermediate allowed in the three-mode trace.
pub const TRACE_MEMORY_LIMIT: usize = 1 << 24;

/// Cross-validation path for [`teleport_ec`]: the three-mode calculation done
/// directly.
///
/// Modes: 1 = input, 2 and 3 = ancillae (`|+>`- and `|0>`-quality). The Bell
/// pair is prepared by a controlled shift from mode 2 onto mode 3; the input
/// is combined with mode 2 on a balanced beamsplitter; the difference-q and
/// sum-p outputs are set to the measured values and their conjugates
/// integrated out. After substituting the beamsplitter inverse, the output
/// field on mode 3 is
///
/// ```text
/// W_out(q3, p3) ∝ ∬ du dv  W_in(sqrt(2) m_q + u, sqrt(2) m_p − v)
///                           · W_plus(u, v + p3) · W_zero(q3 − u, p3)
/// ```
///
/// evaluated here by two staged matrix quadratures on a grid a factor
/// `sqrt 2` finer than the output grid — deliberately *not* the rake
/// discretization, so agreement with [`teleport_ec`] checks the two
/// derivations against each other. The corrective lattice translation from
/// `sqrt(2) m` is applied at the end, and the output renormalized.
pub fn three_mode_teleport_trace(
    w_in: &Field2D,
    ancilla: &AncillaSpec,
    m: Vector2<f64>,
) -> Result<Field2D> {
    let Some(noise) = ancilla.noise() else {
        return Err(Error::InvalidInput(
            "three-mode trace needs approximate ancillae (ideal combs have no grid values)".into(),
        ));
    };
    let plus = approx_state_wigner(Bloch4::logical(1.0, 0.0, 0.0), noise)?;
    let zero = approx_state_wigner(Bloch4::logical(0.0, 0.0, 1.0), noise)?;

    let window = w_in.window();
    let (n_q, n_p) = (w_in.n_q(), w_in.n_p());
    let h_u = w_in.dq() / std::f64::consts::SQRT_2;
    let h_v = w_in.dp() / std::f64::consts::SQRT_2;
    let n_u = (window.width_q() / h_u).floor() as usize;
    let n_v = (window.width_p() / h_v).floor() as usize;
    for (label, a, b) in [("input x inner", n_u, n_v), ("inner x output", n_u, n_p)] {
        if a.saturating_mul(b) > TRACE_MEMORY_LIMIT {
            return Err(Error::MemoryGuard(format!(
                "{label} intermediate {a} x {b} exceeds {TRACE_MEMORY_LIMIT} entries"
            )));
        }
    }
    let u_at = |i: usize| window.q_min + (i as f64 + 0.5) * h_u;
    let v_at = |k: usize| window.p_min + (k as f64 + 0.5) * h_v;

    // 1-D profiles of the (separable) ancilla carriers.
    let plus_profiles = separable_profiles(&plus)?;
    let zero_profiles = separable_profiles(&zero)?;

    let shift = std::f64::consts::SQRT_2 * m;

    // Input samples on the fine (u, v) grid: Win[i, k] = W_in(shift_q + u_i, shift_p - v_k).
    let win = DMatrix::<f64>::from_fn(n_u, n_v, |i, k| {
        w_in.interp(Vector2::new(shift[0] + u_at(i), shift[1] - v_at(k)))
    });

    // Stage 1: p-convolution against the plus-state carriers.
    //   inner(u_i, p3_j) = h_v * sum_c f_c(u_i) * sum_k g_c(v_k + p3_j) Win[i, k]
    let mut inner = DMatrix::<f64>::zeros(n_u, n_p);
    for (fq, gp) in &plus_profiles {
        let g_mat = DMatrix::<f64>::from_fn(n_v, n_p, |k, j| gp.eval(v_at(k) + w_in.p_at(j)));
        let conv = &win * g_mat; // (n_u x n_p)
        for i in 0..n_u {
            let f = fq.eval(u_at(i));
            for j in 0..n_p {
                inner[(i, j)] += f * conv[(i, j)];
            }
        }
    }

    // Stage 2: q-integration against the zero-state carriers.
    //   out(q3_i3, p3_j) = h_u h_v * sum_c' g'_{c'}(p3_j) * sum_i f'_{c'}(q3_i3 - u_i) inner[i, j]
    let mut out = Field2D::zeros(window, n_q, n_p)?;
    for (fq, gp) in &zero_profiles {
        let f_mat = DMatrix::<f64>::from_fn(n_q, n_u, |i3, i| fq.eval(w_in.q_at(i3) - u_at(i)));
        let folded = f_mat * &inner; // (n_q x n_p)
        for j in 0..n_p {
            let g = gp.eval(w_in.p_at(j));
            for i3 in 0..n_q {
                *out.values_mut().get_mut((j, i3)).expect("trace index") +=
                    h_u * h_v * g * folded[(i3, j)];
            }
        }
    }

    let syndrome = decode_syndrome(shift[0], shift[1])?;
    let mut corrected = out.translate(syndrome.nearest_vec());
    let mass = corrected.integrate();
    if !(mass > PROBABILITY_FLOOR) {
        return Err(Error::ProbabilityFloor(mass, PROBABILITY_FLOOR));
    }
    corrected.scale(1.0 / mass);
    Ok(corrected)
}

/// One axis of a separable lattice carrier: enveloped comb of Gaussian teeth
/// `scale * exp(-x^2 / (2 env_var)) * sum_n (phase_n) g_a(x + t (n + v2))`.
struct Profile1 {
    t: f64,
    v1: Rational64,
    v2: Rational64,
    tooth_var: f64,
    env_var: f64,
    scale: f64,
}

impl Profile1 {
    fn eval(&self, x: f64) -> f64 {
        let sigma = self.tooth_var.sqrt();
        let v2 = rational_f64(self.v2);
        let center = (-x / self.t - v2).round() as i64;
        let span = ((8.5 * sigma / self.t).ceil() as i64) + 1;
        let mut comb = 0.0f64;
        for n in (center - span)..=(center + span) {
            let arg = x + self.t * (n as f64 + v2);
            let phase_turns = -self.v1 * Rational64::from_integer(n);
            let phase = crate::theta::unit_phase(phase_turns).re;
            comb += phase
                * (-0.5 * arg * arg / self.tooth_var).exp()
                / (std::f64::consts::TAU * self.tooth_var).sqrt();
        }
        let env = (-0.5 * x * x / self.env_var).exp();
        self.scale * env * comb
    }
}

fn rational_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Split a symmetric-noise state into per-carrier 1-D profile pairs
/// `(f_c(q), g_c(p))` with the carrier weight folded into the q-profile.
fn separable_profiles(state: &GKPWigner) -> Result<Vec<(Profile1, Profile1)>> {
    let mut out = Vec::new();
    for term in state.weighted_terms() {
        let a = term.lattice();
        let spike = term.spike_cov();
        let env = term.envelope().ok_or_else(|| {
            Error::InvalidInput("separable profiles need enveloped carriers".into())
        })?;
        let ecov = env.cov();
        let off = a[(0, 1)].abs() + a[(1, 0)].abs() + spike[(0, 1)].abs() + ecov[(0, 1)].abs();
        if off > 1e-12 || env.mean() != Vector2::zeros() {
            return Err(Error::InvalidInput(
                "three-mode trace needs axis-aligned, origin-centred ancilla carriers".into(),
            ));
        }
        let chars = term.chars();
        let weight = term.prefactor();
        if weight.im.abs() > 1e-12 * weight.re.abs().max(1e-300) {
            return Err(Error::InvalidInput(
                "carrier prefactor unexpectedly complex in separable split".into(),
            ));
        }
        let root_det = (a[(0, 0)] * a[(1, 1)]).abs().sqrt();
        out.push((
            Profile1 {
                t: a[(0, 0)],
                v1: chars.v1[0],
                v2: chars.v2[0],
                tooth_var: spike[(0, 0)],
                env_var: ecov[(0, 0)],
                scale: weight.re * root_det,
            },
            Profile1 {
                t: a[(1, 1)],
                v1: chars.v1[1],
                v2: chars.v2[1],
                tooth_var: spike[(1, 1)],
                env_var: ecov[(1, 1)],
                scale: 1.0,
            },
        ));
    }
    Ok(out)
}
