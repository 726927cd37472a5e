//! Quadrature wavefunctions of the approximate code states: enveloped pulse
//! trains in position and momentum, with the comb period doubling between a
//! computational state and its conjugate basis.
//!
//! Run with `cargo run --example wavefunctions`.

use gkp_phase::states::{wavefunction_eval, Basis, NoiseSpec, StateLabel};
use gkp_phase::SQRT_PI;

/// Simpson's-rule L2 norm of the wavefunction over [-L, L].
fn l2_mass(label: StateLabel, noise: &NoiseSpec, basis: Basis, l: f64, n: usize) -> gkp_phase::Result<f64> {
    let h = 2.0 * l / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let s = -l + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * wavefunction_eval(label, noise, s, basis)?.powi(2);
    }
    Ok(acc * h / 3.0)
}

fn main() -> gkp_phase::Result<()> {
    let noise = NoiseSpec::symmetric(0.01)?;

    // |0> lives on the even multiples of sqrt(pi) in position; |+> on all
    // multiples. The peak spacing doubles accordingly.
    println!("position-basis peaks (psi at s = 0, sqrt(pi), 2 sqrt(pi)):");
    for label in [StateLabel::Zero, StateLabel::Plus] {
        let at = |s: f64| wavefunction_eval(label, &noise, s, Basis::Position);
        println!(
            "  {label:?}: {:+.6}  {:+.6}  {:+.6}",
            at(0.0)?,
            at(SQRT_PI)?,
            at(2.0 * SQRT_PI)?
        );
    }

    // |-> alternates pulse signs in position; in momentum it is a single
    // displaced comb.
    let minus_q = |s: f64| wavefunction_eval(StateLabel::Minus, &noise, s, Basis::Position);
    println!(
        "\n|-> in position alternates: {:+.4} at 0 vs {:+.4} at sqrt(pi)",
        minus_q(0.0)?,
        minus_q(SQRT_PI)?
    );
    let minus_p = |s: f64| wavefunction_eval(StateLabel::Minus, &noise, s, Basis::Momentum);
    println!(
        "|-> in momentum peaks on odd multiples of sqrt(pi): {:+.4} at 0 vs {:+.4} at sqrt(pi)",
        minus_p(0.0)?,
        minus_p(SQRT_PI)?
    );

    // The prefactor normalizes the state up to O(kappa Delta) corrections.
    println!("\nL2 masses (exact up to O(beta) corrections):");
    for (label, basis, name) in [
        (StateLabel::Zero, Basis::Position, "zero, position"),
        (StateLabel::Zero, Basis::Momentum, "zero, momentum"),
        (StateLabel::Plus, Basis::Position, "plus, position"),
    ] {
        println!("  {name}: {:.6}", l2_mass(label, &noise, basis, 40.0, 8000)?);
    }
    Ok(())
}
