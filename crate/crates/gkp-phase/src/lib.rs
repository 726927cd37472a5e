//! Phase-space numerics for square-lattice GKP bosonic qubits.
//!
//! Everything in this crate lives on the phase plane of a single oscillator mode
//! (or a few modes, for the teleportation circuits). The objects of interest —
//! ideal GKP code states, their finite-energy approximations, logical Pauli
//! operators, error-corrected outputs — all share one closed algebraic form:
//! a two-dimensional lattice of Gaussian spikes with root-of-unity weights,
//! optionally damped by a Gaussian envelope. The crate represents that form
//! exactly ([`theta::LatticeSum`]) and manipulates it analytically wherever
//! possible; grids ([`plane::Field2D`]) appear only at the edges, for rendering
//! and for the measurement-style convolutions of error correction.
//!
//! # Modules
//!
//! - [`theta`] — Jacobi theta functions with rational characteristics, their
//!   scaled and multivariate (lattice) forms, Dirac-comb limits, half-period
//!   splitting, and characteristic reduction.
//! - [`plane`] — Gaussian blur/deblur (Weierstrass transform) of lattice sums,
//!   symplectic maps and standard Gaussian gates, grid sampling, integration,
//!   and the phase-space inner product.
//! - [`states`] — GKP Pauli combs, ideal and finite-energy state Wigner
//!   functions, envelope physicality tests, wavefunctions, displacement noise,
//!   stabilizer twirl, and Bloch-vector extraction.
//! - [`ec`] — shift-error syndromes, rake (measurement) convolutions, Kraus and
//!   ideal-ancilla error correction, and teleportation-based correction with a
//!   three-mode cross-check.
//! - [`render`] — deterministic CSV/PGM/JSON emitters and the job runner behind
//!   the `gkp` command-line tool.
//!
//! # Conventions
//!
//! * hbar = 1 and [q, p] = i, so the vacuum has variance 1/2 in each quadrature
//!   and Wigner function W_vac(x) = (1/pi) exp(-|x|^2).
//! * Phase-space points are column vectors x = (q, p); the symplectic form is
//!   Omega = [[0, 1], [-1, 0]].
//! * Wigner functions are normalized so that Tr rho = Int W_rho d^2x = 1, and
//!   operator overlaps carry the factor [`TRACE_FACTOR`]:
//!   Tr[A B] = 2 pi Int W_A W_B d^2x (vacuum purity 2 pi Int W_vac^2 = 1).
//! * On the square GKP lattice the logical Paulis are displacements by
//!   sqrt(pi) steps and the stabilizers by 2 sqrt(pi) steps.
//! * Series truncation keeps the omitted tail below `rel_tol` times the largest
//!   retained term; the default is [`DEFAULT_REL_TOL`].
//!
//! Error taxonomy: every fallible operation returns [`Error`], which separates
//! invalid inputs from physics violations (e.g. a deblur that leaves the space
//! of admissible spike covariances) and from tripped numeric guards; the CLI
//! maps these classes to distinct exit codes.

pub mod ec;
pub mod plane;
pub mod render;
pub mod states;
pub mod theta;

use nalgebra::Vector2;

/// Overlap constant in Tr[A B] = `TRACE_FACTOR` * Int W_A W_B d^2x.
///
/// Fixed by requiring purity for the vacuum: 2 pi Int W_vac^2 d^2x = 1.
pub const TRACE_FACTOR: f64 = std::f64::consts::TAU;

/// Default relative truncation tolerance for theta-series and lattice sums.
pub const DEFAULT_REL_TOL: f64 = 1e-12;

/// sqrt(pi): logical Pauli step of the square GKP lattice.
pub const SQRT_PI: f64 = 1.772_453_850_905_515_9;

/// Largest admissible quadrature noise variance (Delta^2 or kappa^2) for the
/// low-noise closed forms used by [`states`]; beyond this the enveloped-comb
/// factorization of the Wigner function is no longer trustworthy.
pub const LOW_NOISE_MAX: f64 = 0.05;

/// Axis-aligned phase-plane window [q_min, q_max] x [p_min, p_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Rect {
    /// Window centred on the origin with half-width `half` in both quadratures.
    pub fn centered(half: f64) -> Self {
        Rect { q_min: -half, q_max: half, p_min: -half, p_max: half }
    }

    pub fn width_q(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn width_p(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn area(&self) -> f64 {
        self.width_q() * self.width_p()
    }

    pub fn contains(&self, x: Vector2<f64>) -> bool {
        x[0] >= self.q_min && x[0] <= self.q_max && x[1] >= self.p_min && x[1] <= self.p_max
    }

    fn validate(&self) -> Result<()> {
        if !(self.q_min < self.q_max && self.p_min < self.p_max)
            || !self.q_min.is_finite()
            || !self.q_max.is_finite()
            || !self.p_min.is_finite()
            || !self.p_max.is_finite()
        {
            return Err(Error::InvalidInput(format!(
                "degenerate window [{}, {}] x [{}, {}]",
                self.q_min, self.q_max, self.p_min, self.p_max
            )));
        }
        Ok(())
    }
}

/// Crate-wide error type.
///
/// [`Error::class`] buckets variants into the three failure families the CLI
/// distinguishes: invalid specification, physics violation, numeric guard.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad window, non-symplectic matrix,
    /// non-symmetric covariance, zero period, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Pointwise evaluation requested for a Dirac-comb (zero spike covariance)
    /// object; combs only support support/weight enumeration.
    #[error("pointwise evaluation of a Dirac comb is undefined; enumerate its support instead")]
    CombPointwiseEval,

    /// A deblur stepped outside the admissible covariance cone: the requested
    /// spike covariance left the Siegel upper half space (a negative eigenvalue
    /// appeared in spike_cov - Sigma).
    #[error("deblur leaves the Siegel upper half space: spike covariance minus {0:.3e} has a negative eigenvalue")]
    SiegelUpperHalfSpace(f64),

    /// Exact Gaussian convolution of an enveloped lattice sum is not closed
    /// form; the caller must opt into the low-noise approximation explicitly.
    #[error("blurring an enveloped lattice sum is not closed form; use blur_low_noise")]
    EnvelopedBlur,

    /// Noise parameters outside the validity region of the low-noise closed
    /// forms (Delta^2, kappa^2 <= LOW_NOISE_MAX).
    #[error("noise spec outside the low-noise regime: {0}")]
    OutsideLowNoise(String),

    /// Sampled field had an imaginary residue above tolerance — the weighted
    /// sum being sampled was not Hermitian.
    #[error("non-Hermitian field: imaginary residue {residue:.3e} exceeds {tol:.3e} of the field maximum")]
    HermiticityResidue { residue: f64, tol: f64 },

    /// Series truncation failed to converge within the shell/iteration guard.
    #[error("lattice sum truncation guard exceeded ({0} shells)")]
    TruncationGuard(usize),

    /// Fourier-domain deconvolution demanded amplification beyond the dynamic
    /// range guard on a mode carrying signal; reported, never silently clipped.
    #[error("deconvolution dynamic-range guard: mode ({k1}, {k2}) needs amplification exp({log_gain:.1}) but carries signal {amplitude:.3e}")]
    DynamicRangeGuard { k1: i64, k2: i64, log_gain: f64, amplitude: f64 },

    /// Error-correction branch probability fell below the floor — nothing to
    /// renormalize.
    #[error("error-correction branch probability {0:.3e} below floor {1:.0e}")]
    ProbabilityFloor(f64, f64),

    /// Bloch extraction or state sampling asked for a window that misses too
    /// much envelope mass.
    #[error("window covers too little of the state: {0}")]
    WindowCoverage(String),

    /// Stabilizer twirl requested outside the high-quality limit in which the
    /// envelope comb is flat.
    #[error("stabilizer twirl envelope comb deviates from flat by {0:.2e} (limit {1:.0e})")]
    TwirlNotFlat(f64, f64),

    /// A sampled state field exceeded the Wigner magnitude bound 1/pi.
    #[error("state Wigner magnitude {0:.6} exceeds 1/pi beyond tolerance")]
    WignerBound(f64),

    /// Grid larger than the documented memory guard for multi-mode traces.
    #[error("grid memory guard: {0}")]
    MemoryGuard(String),
}

/// CLI-facing failure classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed request — exit code 2.
    InvalidSpec,
    /// Physics violation — exit code 3.
    Physics,
    /// Numeric guard tripped — exit code 4.
    NumericGuard,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::MemoryGuard(_) => ErrorClass::InvalidSpec,
            Error::CombPointwiseEval
            | Error::SiegelUpperHalfSpace(_)
            | Error::EnvelopedBlur
            | Error::OutsideLowNoise(_)
            | Error::TwirlNotFlat(_, _)
            | Error::WignerBound(_) => ErrorClass::Physics,
            Error::HermiticityResidue { .. }
            | Error::TruncationGuard(_)
            | Error::DynamicRangeGuard { .. }
            | Error::ProbabilityFloor(_, _)
            | Error::WindowCoverage(_) => ErrorClass::NumericGuard,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_factor_is_two_pi() {
        assert!((TRACE_FACTOR - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn sqrt_pi_constant_matches_runtime_sqrt() {
        assert_eq!(SQRT_PI, std::f64::consts::PI.sqrt());
    }

    #[test]
    fn rect_basics() {
        let r = Rect::centered(2.0);
        assert_eq!(r.area(), 16.0);
        assert!(r.contains(Vector2::new(1.9, -2.0)));
        assert!(!r.contains(Vector2::new(2.1, 0.0)));
        assert!(Rect { q_min: 1.0, q_max: 1.0, p_min: 0.0, p_max: 1.0 }.validate().is_err());
    }

    #[test]
    fn error_classes_partition() {
        assert_eq!(Error::InvalidInput("x".into()).class(), ErrorClass::InvalidSpec);
        assert_eq!(Error::SiegelUpperHalfSpace(0.1).class(), ErrorClass::Physics);
        assert_eq!(Error::TruncationGuard(5).class(), ErrorClass::NumericGuard);
    }
}
