//! Physicality of envelopes and the noise channels that move between them:
//! the minimal envelope of a spike covariance, the three-way classification
//! of candidate envelopes, Gaussian displacement noise, and the stabilizer
//! twirl that trades the envelope for an exactly periodic comb.
//!
//! Run with `cargo run --example envelopes_and_channels`.

use nalgebra::{Matrix2, Vector2};

use gkp_phase::plane::{Field2D, Gaussian2D};
use gkp_phase::states::{
    approx_state_wigner, check_envelope_field, check_envelope_mixture, min_envelope,
    stabilizer_twirl, Bloch4, NoiseSpec,
};
use gkp_phase::states::displacement_channel;
use gkp_phase::{Rect, DEFAULT_REL_TOL};

fn main() -> gkp_phase::Result<()> {
    // The minimal envelope is an involution on covariances: applying it twice
    // returns the spikes.
    let spike = Matrix2::new(0.02, 0.004, 0.004, 0.03);
    let env_min = min_envelope(&spike)?;
    let back = min_envelope(&env_min)?;
    println!(
        "min_envelope involution: spike eigenvalues ({:.4}, {:.4}) -> envelope ({:.2}, {:.2}) -> back residual {:.2e}",
        spike.symmetric_eigenvalues().min(),
        spike.symmetric_eigenvalues().max(),
        env_min.symmetric_eigenvalues().min(),
        env_min.symmetric_eigenvalues().max(),
        (back - spike).abs().max()
    );

    // Classification of a single-Gaussian envelope against the minimum:
    // narrower than minimal is unphysical, exactly minimal is a pure
    // embedded-error state, wider is a proper mixture.
    println!("\nenvelope trichotomy (single Gaussian, c x minimal):");
    for c in [0.5, 1.0, 2.0] {
        let class = check_envelope_mixture(
            &[(1.0, Gaussian2D::new(Vector2::zeros(), env_min * c)?)],
            &env_min,
        )?;
        println!("  c = {c}: {class:?}");
    }

    // The same decision from gridded data alone, no covariance metadata.
    let smin = Matrix2::identity() * 12.5;
    for c in [0.5, 1.0, 2.0] {
        let g = Gaussian2D::new(Vector2::zeros(), smin * c)?;
        let field = Field2D::tabulate(&g, Rect::centered(36.0), 176, 176)?;
        println!("  gridded, c = {c}: {:?}", check_envelope_field(&field, &smin)?);
    }

    // Displacement noise widens spikes and envelope together; the output
    // envelope is wider than minimal for its spikes, i.e. the pure state
    // decoheres into a mixture.
    let state = approx_state_wigner(Bloch4::logical(0.0, 0.0, 1.0), &NoiseSpec::symmetric(0.02)?)?;
    let noisy = displacement_channel(&state, &(Matrix2::identity() * 0.005))?;
    let mixture_class = check_envelope_mixture(
        &[(1.0, noisy.envelope().expect("enveloped state").clone())],
        &min_envelope(&noisy.spike_cov())?,
    )?;
    println!(
        "\ndisplacement channel: spike 0.01 -> {:.3}, envelope class {:?}, mass {:.6}",
        noisy.spike_cov()[(0, 0)],
        mixture_class,
        noisy.total_mass(DEFAULT_REL_TOL)?
    );

    // Twirling over random stabilizer shifts replaces the envelope by a
    // 2 sqrt(pi)-periodic comb — flat to well under a percent for good states,
    // so the twirled object is the translation-invariant blurred ideal state.
    let twirled = stabilizer_twirl(&state)?;
    println!(
        "stabilizer twirl: envelope removed: {}, Bloch unchanged: {}",
        twirled.envelope().is_none(),
        twirled.bloch().r == state.bloch().r
    );
    let peak = twirled.eval(Vector2::zeros(), DEFAULT_REL_TOL)?;
    println!("  twirled comb peak at the origin: {peak:.6}");
    Ok(())
}
