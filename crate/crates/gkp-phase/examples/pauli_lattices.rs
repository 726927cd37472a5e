//! Two-dimensional lattice sums: the four Pauli combs of the square code,
//! their enumerated spike supports, and the exact blur/deblur algebra.
//!
//! Run with `cargo run --example pauli_lattices`.

use nalgebra::{Matrix2, Vector2};

use gkp_phase::plane::{blur, deblur};
use gkp_phase::states::{pauli_wigner, PauliIndex};
use gkp_phase::{Rect, DEFAULT_REL_TOL, SQRT_PI};

fn main() -> gkp_phase::Result<()> {
    // Delta combs: every logical Pauli is a lattice of +-sqrt(pi) spikes on
    // the sqrt(pi)/2 grid. Enumerate the sites near the origin.
    println!("spike support within 1.2 sqrt(pi) of the origin:");
    let window = Rect::centered(1.2 * SQRT_PI);
    for mu in PauliIndex::ALL {
        let comb = pauli_wigner(mu, Matrix2::zeros(), None)?;
        let sites = comb.sha_support(window)?;
        let negatives = sites.iter().filter(|(_, w)| w.re < 0.0).count();
        println!(
            "  {mu:?}: {} sites, {} of them negative; site nearest the origin at weight {:+.4}",
            sites.len(),
            negatives,
            sites
                .iter()
                .min_by(|(a, _), (b, _)| a.norm().total_cmp(&b.norm()))
                .map(|(_, w)| w.re)
                .unwrap_or(0.0)
        );
    }

    // Finite-width spikes evaluate pointwise. The X comb's spike signs
    // alternate along p: positive at (sqrt(pi)/2, 0), negative one lattice
    // step up at (sqrt(pi)/2, sqrt(pi)).
    let spike = Matrix2::identity() * 0.01;
    let x_comb = pauli_wigner(PauliIndex::X, spike, None)?;
    let pos = x_comb.eval(Vector2::new(0.5 * SQRT_PI, 0.0), DEFAULT_REL_TOL)?;
    let neg = x_comb.eval(Vector2::new(0.5 * SQRT_PI, SQRT_PI), DEFAULT_REL_TOL)?;
    println!("\nX comb spikes one p-step apart: {:+.4}, {:+.4}", pos.re, neg.re);

    // Blurring is exact covariance arithmetic on the spike Gaussians, and
    // deblurring inverts it exactly — no grids involved.
    let sigma = Matrix2::new(0.004, 0.001, 0.001, 0.006);
    let blurred = blur(&x_comb, &sigma)?;
    let back = deblur(&blurred, &sigma)?;
    println!(
        "\nblur/deblur round trip: covariance residual {:.2e}, prefactor ratio {:.12}",
        (back.spike_cov() - x_comb.spike_cov()).abs().max(),
        (back.prefactor() / x_comb.prefactor()).re
    );

    // Removing more width than the spikes have leaves no convergent Gaussian
    // sum; the library refuses instead of returning a divergent object.
    let too_much = spike + Matrix2::identity() * 0.05;
    match deblur(&x_comb, &too_much) {
        Err(e) => println!("over-deblur is rejected: {e}"),
        Ok(_) => unreachable!("negative-width spikes must not be constructed"),
    }
    Ok(())
}
