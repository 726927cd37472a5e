//! Cross-derivation of the teleportation gadget: the fast rake-convolution
//! pipeline against a direct three-mode phase-space trace of the same
//! circuit (two beam splitters, two homodyne detections, feed-forward).
//!
//! Run with `cargo run --example teleportation_trace`.

use nalgebra::Vector2;

use gkp_phase::ec::{teleport_ec, three_mode_teleport_trace, AncillaSpec};
use gkp_phase::plane::{Field2D, Gaussian2D};
use gkp_phase::states::NoiseSpec;
use gkp_phase::{Rect, SQRT_PI};

fn main() -> gkp_phase::Result<()> {
    let vacuum = Field2D::tabulate(
        &Gaussian2D::vacuum(),
        Rect::centered(1.75 * SQRT_PI),
        221,
        221,
    )?;
    let ancilla = AncillaSpec::approximate(NoiseSpec::symmetric(0.02)?)?;

    for m in [Vector2::zeros(), Vector2::new(0.12, -0.08)] {
        let (_, raked) = teleport_ec(&vacuum, m, &ancilla)?;
        let traced = three_mode_teleport_trace(&vacuum, &ancilla, m)?;

        let mut diff = 0.0f64;
        let mut peak = 0.0f64;
        for (a, b) in raked.values().iter().zip(traced.values().iter()) {
            diff = diff.max((a - b).abs());
            peak = peak.max(a.abs());
        }
        println!(
            "outcome m = ({:+.2}, {:+.2}): max |rake - trace| = {:.2e} (peak {:.3}, relative {:.2e})",
            m.x,
            m.y,
            diff,
            peak,
            diff / peak
        );
    }

    println!(
        "\nThe two computations share no code path: the rake route multiplies and\n\
         convolves 2-D combs, the trace route builds the joint three-mode Gaussian\n\
         integrand on staggered quadrature grids and integrates out two modes."
    );
    Ok(())
}
