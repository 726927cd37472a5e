//! Gaussian unitaries as symplectic maps on the code's phase space: the
//! Fourier gate permutes Pauli combs like a Hadamard, the shear like the
//! phase gate, and sqrt(pi) displacements implement the logical Paulis.
//!
//! Run with `cargo run --example symplectic_gates`.

use nalgebra::{Matrix2, Vector2};

use gkp_phase::plane::{apply_symplectic, symplectic_for_gate, Gate, SymplecticMap};
use gkp_phase::states::{pauli_wigner, PauliIndex};
use gkp_phase::SQRT_PI;

/// Identify which signed Pauli comb `ls` is by comparing characteristics
/// against the four canonical combs rebuilt at the same spike covariance.
fn identify(ls: &gkp_phase::theta::LatticeSum) -> Option<(PauliIndex, f64)> {
    for mu in PauliIndex::ALL {
        let want = pauli_wigner(mu, ls.spike_cov(), None).ok()?;
        if ls.lattice() == want.lattice() && ls.chars() == want.chars() {
            let ratio = ls.prefactor() / want.prefactor();
            if ratio.im.abs() < 1e-12 {
                return Some((mu, ratio.re));
            }
        }
    }
    None
}

fn show(label: &str, map: &SymplecticMap) -> gkp_phase::Result<()> {
    let spike = Matrix2::identity() * 0.01;
    print!("{label}:");
    for mu in PauliIndex::ALL {
        let moved = apply_symplectic(&pauli_wigner(mu, spike, None)?, map)?;
        match identify(&moved) {
            Some((to, sign)) => print!("  {mu:?} -> {}{to:?}", if sign < 0.0 { "-" } else { "+" }),
            None => print!("  {mu:?} -> ?"),
        }
    }
    println!();
    Ok(())
}

fn main() -> gkp_phase::Result<()> {
    show("Fourier (Hadamard)  ", &symplectic_for_gate(Gate::Fourier))?;
    show("Shear   (phase gate)", &symplectic_for_gate(Gate::Shear))?;
    show(
        "shift sqrt(pi) in q (logical X)",
        &SymplecticMap::displacement(Vector2::new(SQRT_PI, 0.0)),
    )?;
    show(
        "shift sqrt(pi) in p (logical Z)",
        &SymplecticMap::displacement(Vector2::new(0.0, SQRT_PI)),
    )?;
    show(
        "shift 2 sqrt(pi)    (stabilizer)",
        &SymplecticMap::displacement(Vector2::new(2.0 * SQRT_PI, 0.0)),
    )?;

    // Displacements must be rational combinations of lattice vectors so the
    // shift folds into exact characteristics; anything else is refused.
    let arbitrary = SymplecticMap::displacement(Vector2::new(0.123_456_7, 0.0));
    let spike = Matrix2::identity() * 0.01;
    match apply_symplectic(&pauli_wigner(PauliIndex::Z, spike, None)?, &arbitrary) {
        Err(e) => println!("\nnon-lattice displacement rejected: {e}"),
        Ok(_) => unreachable!("irrational shifts have no exact comb representation"),
    }
    Ok(())
}
