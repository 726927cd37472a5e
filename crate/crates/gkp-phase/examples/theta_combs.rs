//! One-dimensional Gaussian pulse trains: evaluation, the quasiperiodic shift
//! rule, half-period splitting, and the delta-comb limit.
//!
//! Run with `cargo run --example theta_combs`.

use num_complex::Complex64;
use num_rational::Rational64;

use gkp_phase::theta::Theta1DSpec;
use gkp_phase::SQRT_PI;

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn main() -> gkp_phase::Result<()> {
    // A train of width-sigma Gaussians on period T, one pulse per period.
    // tau = 2 pi i sigma^2 carries the absolute pulse width.
    let sigma2 = 0.01;
    let tau = Complex64::new(0.0, std::f64::consts::TAU * sigma2);

    println!("pulse trains, sigma^2 = {sigma2}:");
    for t in [1.0, SQRT_PI] {
        let spec = Theta1DSpec::new(t, r(0, 1), r(0, 1), tau)?;
        let peak = spec.eval(Complex64::new(0.0, 0.0), 1e-12)?.re;
        let valley = spec.eval(Complex64::new(0.5 * t, 0.0), 1e-12)?.re;
        println!("  T = {t:.4}: peak {peak:.6}, midpoint {valley:.3e}");
    }

    // Shifting the argument by a full period multiple reproduces the value up
    // to an explicit exponential factor; with a real shift (m1 = 0) the train
    // is exactly periodic.
    let t = 1.0;
    let spec = Theta1DSpec::new(t, r(0, 1), r(0, 1), tau)?;
    let z = Complex64::new(0.37, 0.0);
    let a = spec.eval(z, 1e-12)?;
    let b = spec.eval(z + Complex64::new(3.0 * t, 0.0), 1e-12)?;
    println!("\nperiodicity: |f(z) - f(z + 3T)| = {:.2e}", (a - b).norm());

    // A half-integer phase characteristic alternates pulse signs; splitting
    // rewrites the train as two period-2T trains with +-1/sqrt(2) weights.
    let phased = Theta1DSpec::new(t, r(1, 2), r(0, 1), tau)?;
    let parts = phased.split_half_period()?;
    println!("\nhalf-period split of the sign-alternating train:");
    for (part, coeff) in &parts {
        println!(
            "  weight {coeff:+.6} x train(period {}, offset {})",
            part.period(),
            part.v2(),
        );
    }
    let whole = phased.eval(z, 1e-12)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (part, coeff) in &parts {
        sum += Complex64::new(*coeff, 0.0) * part.eval(z, 1e-12)?;
    }
    println!("  residual of the identity at z = {z}: {:.2e}", (whole - sum).norm());

    // The comb (delta-spike) limit cannot be evaluated pointwise but still
    // splits and carries its characteristics symbolically.
    let comb = Theta1DSpec::sha(SQRT_PI, r(1, 2), r(0, 1))?;
    println!(
        "\ndelta comb on period sqrt(pi): is_sha = {}, split parts stay combs: {}",
        comb.is_sha(),
        comb.split_half_period()?.iter().all(|(p, _)| p.is_sha())
    );
    Ok(())
}
