//! Gaussian calculus on the phase plane: normalized Gaussians, symplectic maps
//! of Gaussian unitaries, blur/deblur (forward/backward Weierstrass transform)
//! of lattice sums, and uniform grid sampling with integration.
//!
//! The analytic objects ([`crate::theta::LatticeSum`], [`Gaussian2D`]) stay
//! analytic through every operation here; [`Field2D`] grids appear only where a
//! computation genuinely leaves closed form (rendering, measurement-style
//! convolutions). Grids are cell-centered: sample `j` of an axis spanning
//! `[a, b]` with `n` cells sits at `a + (j + 1/2)(b - a)/n`, so a Riemann sum
//! times the cell area is the midpoint rule and no boundary point is counted
//! twice. With the default window `[-4 sqrt(pi), 4 sqrt(pi)]^2` at 512^2, one
//! logical step `sqrt(pi)` is exactly 64 cells, which lets corrective shifts in
//! error correction act as exact index rolls.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::theta::{rationalize, Characteristics, LatticeSum};
use crate::{Error, Rect, Result};

/// Construction tolerance for S^T Omega S = Omega.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Largest imaginary residue (relative to the field maximum) tolerated when
/// sampling a sum of lattice terms that is supposed to be Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Denominator cap when folding a displacement into lattice characteristics.
const DISPLACEMENT_MAX_DEN: i64 = 4096;
const DISPLACEMENT_TOL: f64 = 1e-9;

/// Eigenvalues (min, max) of a symmetric 2x2 matrix (off-diagonal averaged).
pub(crate) fn sym_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mid - rad, mid + rad)
}

pub(crate) fn check_symmetric(m: &Matrix2<f64>, what: &str) -> Result<()> {
    let scale = m.norm().max(1.0);
    if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "{what} is not symmetric: off-diagonals {} vs {}",
            m[(0, 1)],
            m[(1, 0)]
        )));
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Matrix2::new(m[(0, 0)], b, b, m[(1, 1)])
}

/// Normalized 2-D Gaussian `G_Sigma(x - mean)` with
/// `G_Sigma(y) = (2 pi)^{-1} (det Sigma)^{-1/2} exp(-y^T Sigma^{-1} y / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian2D {
    mean: Vector2<f64>,
    cov: Matrix2<f64>,
    cov_inv: Matrix2<f64>,
    norm: f64,
}

impl Gaussian2D {
    pub fn new(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<Self> {
        check_symmetric(&cov, "covariance")?;
        let cov = symmetrize(&cov);
        let (lo, _) = sym_eigenvalues(&cov);
        if !(lo > 0.0) {
            return Err(Error::InvalidInput(format!(
                "covariance must be positive definite (smallest eigenvalue {lo:.3e})"
            )));
        }
        let det = cov.determinant();
        let cov_inv = cov.try_inverse().ok_or_else(|| {
            Error::InvalidInput("covariance numerically singular".into())
        })?;
        Ok(Gaussian2D { mean, cov, cov_inv, norm: 1.0 / (std::f64::consts::TAU * det.sqrt()) })
    }

    /// Isotropic Gaussian `c * I` centred at the origin.
    pub fn isotropic(c: f64) -> Result<Self> {
        Self::new(Vector2::zeros(), Matrix2::identity() * c)
    }

    /// The vacuum Wigner function: covariance I/2, peak 1/pi at the origin.
    pub fn vacuum() -> Self {
        Self::isotropic(0.5).expect("I/2 is SPD")
    }

    pub fn mean(&self) -> Vector2<f64> {
        self.mean
    }

    pub fn cov(&self) -> Matrix2<f64> {
        self.cov
    }

    pub fn eval(&self, x: Vector2<f64>) -> f64 {
        let y = x - self.mean;
        let quad = 0.5 * (y.transpose() * self.cov_inv * y)[(0, 0)];
        self.norm * (-quad).exp()
    }
}

/// Affine phase-space action `x -> S x + c` of a Gaussian unitary on `N` modes,
/// with `S` symplectic (`S^T Omega S = Omega`, checked at construction).
///
/// Coordinates are interleaved: `(q_1, p_1, q_2, p_2, ...)`, and `Omega` is the
/// block-diagonal stack of `[[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMap {
    s: DMatrix<f64>,
    c: DVector<f64>,
}

/// Standard symplectic form for `n_modes` modes (interleaved coordinates).
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

impl SymplecticMap {
    pub fn new(s: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let dim = s.nrows();
        if dim == 0 || dim % 2 != 0 || s.ncols() != dim || c.len() != dim {
            return Err(Error::InvalidInput(format!(
                "symplectic map needs a 2N x 2N matrix and 2N vector, got {}x{} and {}",
                s.nrows(),
                s.ncols(),
                c.len()
            )));
        }
        let omega = symplectic_form(dim / 2);
        let residue = (s.transpose() * &omega * &s - &omega).abs().max();
        if residue > SYMPLECTIC_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not symplectic: |S^T Omega S - Omega| = {residue:.3e}"
            )));
        }
        Ok(SymplecticMap { s, c })
    }

    /// Single-mode map from fixed-size parts.
    pub fn single_mode(s: Matrix2<f64>, c: Vector2<f64>) -> Result<Self> {
        Self::new(
            DMatrix::from_fn(2, 2, |i, j| s[(i, j)]),
            DVector::from_vec(vec![c[0], c[1]]),
        )
    }

    pub fn identity(n_modes: usize) -> Self {
        SymplecticMap {
            s: DMatrix::identity(2 * n_modes, 2 * n_modes),
            c: DVector::zeros(2 * n_modes),
        }
    }

    /// Pure displacement by `c` (identity linear part).
    pub fn displacement(c: Vector2<f64>) -> Self {
        SymplecticMap {
            s: DMatrix::identity(2, 2),
            c: DVector::from_vec(vec![c[0], c[1]]),
        }
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn n_modes(&self) -> usize {
        self.s.nrows() / 2
    }

    /// 2x2 linear part, for single-mode maps.
    pub fn s2(&self) -> Result<Matrix2<f64>> {
        if self.n_modes() != 1 {
            return Err(Error::InvalidInput(format!(
                "expected a single-mode map, got {} modes",
                self.n_modes()
            )));
        }
        Ok(Matrix2::new(self.s[(0, 0)], self.s[(0, 1)], self.s[(1, 0)], self.s[(1, 1)]))
    }

    pub fn c2(&self) -> Result<Vector2<f64>> {
        if self.n_modes() != 1 {
            return Err(Error::InvalidInput("expected a single-mode map".into()));
        }
        Ok(Vector2::new(self.c[0], self.c[1]))
    }

    /// `self` after `earlier`: `x -> S_self (S_earlier x + c_earlier) + c_self`.
    pub fn compose(&self, earlier: &SymplecticMap) -> Result<SymplecticMap> {
        if self.s.nrows() != earlier.s.nrows() {
            return Err(Error::InvalidInput("mode-count mismatch in composition".into()));
        }
        Ok(SymplecticMap {
            s: &self.s * &earlier.s,
            c: &self.s * &earlier.c + &self.c,
        })
    }

    /// Inverse map; `S^{-1} = -Omega S^T Omega` needs no numeric inversion.
    pub fn inverse(&self) -> SymplecticMap {
        let omega = symplectic_form(self.n_modes());
        let s_inv = -(&omega) * self.s.transpose() * &omega;
        let c_inv = -(&s_inv) * &self.c;
        SymplecticMap { s: s_inv, c: c_inv }
    }

    pub fn apply_point(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.s * x + &self.c
    }
}

/// The Gaussian-unitary gates used on square-lattice GKP codes.
///
/// Two-mode gates act on a canonical pair in interleaved coordinates
/// `(q_1, p_1, q_2, p_2)`; embed into wider registers by coordinate
/// relabeling at the call site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// Quarter rotation `q -> -p, p -> q`; the GKP logical Hadamard.
    Fourier,
    /// Momentum shear `p -> p + q`; the GKP logical phase gate.
    Shear,
    /// Phase-plane rotation by `phi` (Fourier = Rotation(pi/2)).
    Rotation(f64),
    /// 50:50 beamsplitter; output mode 1 carries the difference
    /// `(x_1 - x_2)/sqrt(2)`, output mode 2 the sum.
    BeamSplitter,
    /// Sum gate: `q_2 -> q_2 + q_1`, `p_1 -> p_1 - p_2`.
    Cx,
    /// Controlled phase: `p_1 -> p_1 + q_2`, `p_2 -> p_2 + q_1`.
    Cz,
}

/// Symplectic map of a standard gate (displacement-free).
pub fn symplectic_for_gate(gate: Gate) -> SymplecticMap {
    let from2 = |m: Matrix2<f64>| {
        SymplecticMap::single_mode(m, Vector2::zeros()).expect("gate matrices are symplectic")
    };
    let from4 = |rows: [[f64; 4]; 4]| {
        let s = DMatrix::from_fn(4, 4, |i, j| rows[i][j]);
        SymplecticMap::new(s, DVector::zeros(4)).expect("gate matrices are symplectic")
    };
    match gate {
        Gate::Fourier => from2(Matrix2::new(0.0, -1.0, 1.0, 0.0)),
        Gate::Shear => from2(Matrix2::new(1.0, 0.0, 1.0, 1.0)),
        Gate::Rotation(phi) => {
            let (s, c) = phi.sin_cos();
            from2(Matrix2::new(c, -s, s, c))
        }
        Gate::BeamSplitter => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            from4([
                [r, 0.0, -r, 0.0],
                [0.0, r, 0.0, -r],
                [r, 0.0, r, 0.0],
                [0.0, r, 0.0, r],
            ])
        }
        Gate::Cx => from4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, -1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        Gate::Cz => from4([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
        ]),
    }
}

/// Convolve a lattice sum with `G_Sigma`: spikes broaden, `spike_cov += Sigma`.
///
/// Exact only for envelope-free sums — convolution does not commute with an
/// envelope product — so enveloped inputs are refused; use [`blur_low_noise`]
/// to apply the narrow-spike approximation that leaves the envelope untouched.
pub fn blur(ls: &LatticeSum, sigma: &Matrix2<f64>) -> Result<LatticeSum> {
    if ls.envelope().is_some() {
        return Err(Error::EnvelopedBlur);
    }
    blur_low_noise(ls, sigma)
}

/// Blur in the narrow-spike (low-noise) regime: spikes broaden, the envelope —
/// which varies slowly on the spike scale — is carried through unchanged.
pub fn blur_low_noise(ls: &LatticeSum, sigma: &Matrix2<f64>) -> Result<LatticeSum> {
    check_symmetric(sigma, "blur covariance")?;
    let (lo, _) = sym_eigenvalues(sigma);
    if lo < -1e-12 * sigma.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "blur covariance has negative eigenvalue {lo:.3e}"
        )));
    }
    ls.rebuild(
        ls.lattice(),
        ls.chars(),
        ls.spike_cov() + sigma,
        ls.envelope().cloned(),
        ls.prefactor(),
    )
}

/// Deconvolve `G_Sigma` out of a lattice sum: `spike_cov -= Sigma`.
///
/// This inverts [`blur`] (and [`blur_low_noise`], within the regime where that
/// approximation holds) exactly on the analytic representation. If the
/// subtraction produces a negative eigenvalue the requested object has left the
/// Siegel upper half space — it is no region's theta function — and the call
/// fails rather than returning a non-convergent carrier.
pub fn deblur(ls: &LatticeSum, sigma: &Matrix2<f64>) -> Result<LatticeSum> {
    check_symmetric(sigma, "deblur covariance")?;
    let (sig_lo, _) = sym_eigenvalues(sigma);
    if sig_lo < -1e-12 * sigma.norm().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "deblur covariance has negative eigenvalue {sig_lo:.3e}"
        )));
    }
    let next = ls.spike_cov() - sigma;
    let (lo, _) = sym_eigenvalues(&symmetrize(&next));
    let scale = ls.spike_cov().norm().max(sigma.norm()).max(1.0);
    if lo < -1e-12 * scale {
        return Err(Error::SiegelUpperHalfSpace(lo));
    }
    ls.rebuild(ls.lattice(), ls.chars(), next, ls.envelope().cloned(), ls.prefactor())
}

/// Push a lattice sum through a single-mode Gaussian unitary:
/// `W'(x) = W(S^{-1}(x - c))`.
///
/// When the rotated lattice `S A` spans the same lattice as `A` (i.e.
/// `A^{-1} S A` is an integer matrix), the lattice is kept and the action lands
/// entirely on the characteristics: `v1' = Sbar^{-T} v1`,
/// `v2' = Sbar v2 - A^{-1} c`, with the re-canonicalization phase folded into
/// the prefactor — this is how Clifford gates permute GKP Pauli combs with
/// their +-1 signs. Otherwise the lattice matrix itself becomes `S A`. Either
/// way the displacement must be a rational combination of lattice vectors
/// (denominator <= 4096); anything else cannot be folded into exact
/// characteristics and is refused.
pub fn apply_symplectic(ls: &LatticeSum, map: &SymplecticMap) -> Result<LatticeSum> {
    let s = map.s2()?;
    let c = map.c2()?;
    let a = ls.lattice();
    let a_inv = a.try_inverse().expect("lattice invertible by construction");

    let spike = symmetrize(&(s * ls.spike_cov() * s.transpose()));
    let envelope = match ls.envelope() {
        Some(g) => Some(Gaussian2D::new(s * g.mean() + c, symmetrize(&(s * g.cov() * s.transpose())))?),
        None => None,
    };

    let sbar = a_inv * s * a;
    if let Some(sbar_int) = integer_matrix(&sbar, 1e-9) {
        // Lattice-preserving branch: integer unimodular Sbar relabels the
        // summation index; characteristics transform exactly.
        let det = sbar_int[0][0] * sbar_int[1][1] - sbar_int[0][1] * sbar_int[1][0];
        if det.abs() == 1 {
            let chars = ls.chars();
            // Sbar^{-T} for an integer matrix with det +-1 is integer:
            // inv([[a,b],[c,d]]) = [[d,-b],[-c,a]]/det, then transpose.
            let [[ia, ib], [ic, id]] = sbar_int;
            let inv_t = [[id * det, -ic * det], [-ib * det, ia * det]];
            let v1 = [
                chars.v1[0] * inv_t[0][0] + chars.v1[1] * inv_t[0][1],
                chars.v1[0] * inv_t[1][0] + chars.v1[1] * inv_t[1][1],
            ];
            let shift = a_inv * c;
            let sh = [
                rationalize(shift[0], DISPLACEMENT_MAX_DEN, DISPLACEMENT_TOL)?,
                rationalize(shift[1], DISPLACEMENT_MAX_DEN, DISPLACEMENT_TOL)?,
            ];
            let v2 = [
                chars.v2[0] * sbar_int[0][0] + chars.v2[1] * sbar_int[0][1] - sh[0],
                chars.v2[0] * sbar_int[1][0] + chars.v2[1] * sbar_int[1][1] - sh[1],
            ];
            return ls.rebuild(a, Characteristics::new(v1, v2), spike, envelope, ls.prefactor());
        }
    }

    // General branch: carry the rotation in the lattice matrix.
    let a_new = s * a;
    let a_new_inv = a_new.try_inverse().ok_or_else(|| {
        Error::InvalidInput("transformed lattice is numerically singular".into())
    })?;
    let shift = a_new_inv * c;
    let chars = ls.chars();
    let v2 = [
        chars.v2[0] - rationalize(shift[0], DISPLACEMENT_MAX_DEN, DISPLACEMENT_TOL)?,
        chars.v2[1] - rationalize(shift[1], DISPLACEMENT_MAX_DEN, DISPLACEMENT_TOL)?,
    ];
    ls.rebuild(a_new, Characteristics::new(chars.v1, v2), spike, envelope, ls.prefactor())
}

fn integer_matrix(m: &Matrix2<f64>, tol: f64) -> Option<[[i64; 2]; 2]> {
    let mut out = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let v = m[(i, j)];
            let r = v.round();
            if (v - r).abs() > tol || r.abs() > 1e15 {
                return None;
            }
            out[i][j] = r as i64;
        }
    }
    Some(out)
}

/// Anything that can be evaluated pointwise as a real Wigner-type function.
///
/// Error-correction overlaps need their inputs at full analytic precision —
/// interpolating a 512^2 grid costs percent-level errors where the closed forms
/// give 1e-12 — so the maps accept this trait instead of forcing everything
/// through [`Field2D`]. Grids still implement it (bilinearly, zero outside
/// their window) for measured or otherwise non-analytic data.
pub trait WignerFn: Sync {
    fn eval_point(&self, x: Vector2<f64>) -> f64;

    /// Radius beyond which the function is negligible, when known. Grids use
    /// their window, enveloped objects their envelope; unbounded objects
    /// return `None` and overlap routines refuse them.
    fn support_radius(&self) -> Option<f64> {
        None
    }
}

impl WignerFn for Gaussian2D {
    fn eval_point(&self, x: Vector2<f64>) -> f64 {
        self.eval(x)
    }

    fn support_radius(&self) -> Option<f64> {
        let (_, hi) = sym_eigenvalues(&self.cov());
        Some(self.mean().norm() + 9.0 * hi.sqrt())
    }
}

impl WignerFn for LatticeSum {
    /// Real part at default tolerance. Delta combs have no pointwise values;
    /// evaluating one yields NaN, which poisons downstream sums visibly rather
    /// than silently.
    fn eval_point(&self, x: Vector2<f64>) -> f64 {
        self.eval(x, crate::DEFAULT_REL_TOL).map(|v| v.re).unwrap_or(f64::NAN)
    }

    fn support_radius(&self) -> Option<f64> {
        let env = self.envelope()?;
        let (_, hi) = sym_eigenvalues(&(env.cov() + self.spike_cov()));
        Some(env.mean().norm() + 9.0 * hi.sqrt())
    }
}

/// Cell-centered real-valued samples on a rectangular window.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    window: Rect,
    n_q: usize,
    n_p: usize,
    /// Row i_p, column i_q: value at (q_at(i_q), p_at(i_p)).
    values: Array2<f64>,
}

impl Field2D {
    pub fn zeros(window: Rect, n_q: usize, n_p: usize) -> Result<Self> {
        window.validate()?;
        if n_q == 0 || n_p == 0 {
            return Err(Error::InvalidInput("resolution must be positive".into()));
        }
        Ok(Field2D { window, n_q, n_p, values: Array2::zeros((n_p, n_q)) })
    }

    /// Tabulate `f` at every cell center, rows in parallel.
    pub fn tabulate<F: WignerFn + ?Sized>(
        f: &F,
        window: Rect,
        n_q: usize,
        n_p: usize,
    ) -> Result<Self> {
        let mut field = Self::zeros(window, n_q, n_p)?;
        let dq = field.dq();
        let dp = field.dp();
        let q0 = window.q_min + 0.5 * dq;
        let p0 = window.p_min + 0.5 * dp;
        field
            .values
            .as_slice_mut()
            .expect("freshly allocated arrays are contiguous")
            .par_chunks_mut(n_q)
            .enumerate()
            .for_each(|(i_p, row)| {
                let p = p0 + i_p as f64 * dp;
                for (i_q, v) in row.iter_mut().enumerate() {
                    *v = f.eval_point(Vector2::new(q0 + i_q as f64 * dq, p));
                }
            });
        Ok(field)
    }

    pub fn window(&self) -> Rect {
        self.window
    }

    pub fn n_q(&self) -> usize {
        self.n_q
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn dq(&self) -> f64 {
        self.window.width_q() / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        self.window.width_p() / self.n_p as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn q_at(&self, i_q: usize) -> f64 {
        self.window.q_min + (i_q as f64 + 0.5) * self.dq()
    }

    pub fn p_at(&self, i_p: usize) -> f64 {
        self.window.p_min + (i_p as f64 + 0.5) * self.dp()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn get(&self, i_q: usize, i_p: usize) -> f64 {
        self.values[(i_p, i_q)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Midpoint-rule integral over the window (Kahan-compensated).
    pub fn integrate(&self) -> f64 {
        let mut acc = Kahan::new();
        for v in self.values.iter() {
            acc.add(*v);
        }
        acc.value() * self.cell_area()
    }

    /// Midpoint-rule integral of the pointwise product `self * other`.
    ///
    /// Multiply by [`crate::TRACE_FACTOR`] to read the result as an operator
    /// trace `Tr[A B]`.
    pub fn inner_product(&self, other: &Field2D) -> Result<f64> {
        self.check_aligned(other)?;
        let mut acc = Kahan::new();
        for (a, b) in self.values.iter().zip(other.values.iter()) {
            acc.add(a * b);
        }
        Ok(acc.value() * self.cell_area())
    }

    pub fn check_aligned(&self, other: &Field2D) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        if self.n_q != other.n_q
            || self.n_p != other.n_p
            || !close(self.window.q_min, other.window.q_min)
            || !close(self.window.q_max, other.window.q_max)
            || !close(self.window.p_min, other.window.p_min)
            || !close(self.window.p_max, other.window.p_max)
        {
            return Err(Error::InvalidInput(
                "fields have mismatched windows or resolutions".into(),
            ));
        }
        Ok(())
    }

    /// Bilinear interpolation between cell centers; zero outside the window.
    pub fn interp(&self, x: Vector2<f64>) -> f64 {
        let fq = (x[0] - self.window.q_min) / self.dq() - 0.5;
        let fp = (x[1] - self.window.p_min) / self.dp() - 0.5;
        let jq = fq.floor();
        let jp = fp.floor();
        let tq = fq - jq;
        let tp = fp - jp;
        let sample = |iq: i64, ip: i64| -> f64 {
            if iq < 0 || ip < 0 || iq >= self.n_q as i64 || ip >= self.n_p as i64 {
                0.0
            } else {
                self.values[(ip as usize, iq as usize)]
            }
        };
        let (jq, jp) = (jq as i64, jp as i64);
        (1.0 - tq) * (1.0 - tp) * sample(jq, jp)
            + tq * (1.0 - tp) * sample(jq + 1, jp)
            + (1.0 - tq) * tp * sample(jq, jp + 1)
            + tq * tp * sample(jq + 1, jp + 1)
    }

    /// The field of `x -> self(x + shift)`, on the same window.
    ///
    /// Shifts commensurate with the grid (within 1e-9 of a whole number of
    /// cells on each axis) are exact index rolls with zeros entering from
    /// outside; incommensurate shifts fall back to bilinear resampling.
    pub fn translate(&self, shift: Vector2<f64>) -> Field2D {
        let kq = shift[0] / self.dq();
        let kp = shift[1] / self.dp();
        let mut out = Field2D {
            window: self.window,
            n_q: self.n_q,
            n_p: self.n_p,
            values: Array2::zeros((self.n_p, self.n_q)),
        };
        if (kq - kq.round()).abs() < 1e-9 && (kp - kp.round()).abs() < 1e-9 {
            let kq = kq.round() as i64;
            let kp = kp.round() as i64;
            for ip in 0..self.n_p as i64 {
                let src_p = ip + kp;
                if src_p < 0 || src_p >= self.n_p as i64 {
                    continue;
                }
                for iq in 0..self.n_q as i64 {
                    let src_q = iq + kq;
                    if src_q < 0 || src_q >= self.n_q as i64 {
                        continue;
                    }
                    out.values[(ip as usize, iq as usize)] =
                        self.values[(src_p as usize, src_q as usize)];
                }
            }
        } else {
            for ip in 0..self.n_p {
                for iq in 0..self.n_q {
                    let x = Vector2::new(self.q_at(iq) + shift[0], self.p_at(ip) + shift[1]);
                    out.values[(ip, iq)] = self.interp(x);
                }
            }
        }
        out
    }

    /// Rescale all values by `factor`.
    pub fn scale(&mut self, factor: f64) {
        self.values.mapv_inplace(|v| v * factor);
    }
}

impl WignerFn for Field2D {
    fn eval_point(&self, x: Vector2<f64>) -> f64 {
        self.interp(x)
    }

    fn support_radius(&self) -> Option<f64> {
        let half_q = 0.5 * self.window.width_q();
        let half_p = 0.5 * self.window.width_p();
        let center_q = 0.5 * (self.window.q_min + self.window.q_max);
        let center_p = 0.5 * (self.window.p_min + self.window.p_max);
        Some((center_q * center_q + center_p * center_p).sqrt()
            + (half_q * half_q + half_p * half_p).sqrt())
    }
}

/// Sample the real part of a weighted sum of lattice terms on a grid.
///
/// All terms must be spiky (delta combs have no pointwise values). The
/// imaginary residue of the sum is tracked; a residue above
/// [`HERMITICITY_TOL`] of the largest magnitude means the term weights do not
/// describe a Hermitian operator, and the call fails instead of silently
/// discarding the imaginary part.
pub fn sample_field(
    terms: &[LatticeSum],
    window: Rect,
    n_q: usize,
    n_p: usize,
    rel_tol: f64,
) -> Result<Field2D> {
    if terms.is_empty() {
        return Err(Error::InvalidInput("no terms to sample".into()));
    }
    for t in terms {
        if t.is_comb() {
            return Err(Error::InvalidInput(
                "delta-comb term cannot be sampled pointwise; blur it first or enumerate its support".into(),
            ));
        }
    }
    let mut field = Field2D::zeros(window, n_q, n_p)?;
    let dq = field.dq();
    let dp = field.dp();
    let q0 = window.q_min + 0.5 * dq;
    let p0 = window.p_min + 0.5 * dp;

    let rows: Vec<Result<(Vec<f64>, f64, f64)>> = (0..n_p)
        .into_par_iter()
        .map(|i_p| {
            let p = p0 + i_p as f64 * dp;
            let mut row = vec![0.0f64; n_q];
            let mut max_mag = 0.0f64;
            let mut max_im = 0.0f64;
            for (i_q, slot) in row.iter_mut().enumerate() {
                let x = Vector2::new(q0 + i_q as f64 * dq, p);
                let mut v = Complex64::new(0.0, 0.0);
                for t in terms {
                    v += t.eval(x, rel_tol)?;
                }
                max_mag = max_mag.max(v.norm());
                max_im = max_im.max(v.im.abs());
                *slot = v.re;
            }
            Ok((row, max_mag, max_im))
        })
        .collect();

    let mut max_mag = 0.0f64;
    let mut max_im = 0.0f64;
    for (i_p, r) in rows.into_iter().enumerate() {
        let (row, mag, im) = r?;
        max_mag = max_mag.max(mag);
        max_im = max_im.max(im);
        for (i_q, v) in row.into_iter().enumerate() {
            field.values[(i_p, i_q)] = v;
        }
    }
    if max_mag > 0.0 && max_im > HERMITICITY_TOL * max_mag {
        return Err(Error::HermiticityResidue { residue: max_im / max_mag, tol: HERMITICITY_TOL });
    }
    Ok(field)
}

/// Kahan-compensated real accumulator.
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn new() -> Self {
        Kahan { sum: 0.0, comp: 0.0 }
    }

    pub(crate) fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}
