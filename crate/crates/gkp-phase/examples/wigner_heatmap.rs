//! Render the Wigner function of an approximate code state to PGM and CSV,
//! the same artifacts the `gkp` binary produces.
//!
//! Run with `cargo run --example wigner_heatmap`. Files land in a `gkp-demo`
//! directory under the system temp dir.

use gkp_phase::render::{field_csv, field_pgm};
use gkp_phase::states::{approx_state_wigner, Bloch4, NoiseSpec};
use gkp_phase::{Rect, SQRT_PI};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // The logical zero at moderate noise: positive identity+Z comb under a
    // wide envelope, with the familiar negative interference spikes.
    let noise = NoiseSpec::symmetric(0.04)?;
    let state = approx_state_wigner(Bloch4::logical(0.0, 0.0, 1.0), &noise)?;
    let window = Rect::centered(3.0 * SQRT_PI);
    let field = state.sample(window, 256, 256, 1e-10)?;

    println!(
        "sampled 256x256 over [-3, 3] sqrt(pi): peak {:.4}, most negative {:.4}, in-window mass {:.4}",
        field.max_abs(),
        field
            .values()
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v)),
        field.integrate()
    );

    let dir = std::env::temp_dir().join("gkp-demo");
    std::fs::create_dir_all(&dir)?;
    let pgm = dir.join("zero_state.pgm");
    let csv = dir.join("zero_state.csv");
    std::fs::write(&pgm, field_pgm(&field, field.max_abs()))?;
    std::fs::write(&csv, field_csv(&field))?;
    println!("wrote {}", pgm.display());
    println!("wrote {}", csv.display());

    // The same grid through the heatmap's eyes: one character per 4x4 block,
    // '#' for strongly positive, '.' near zero, 'o' for negative.
    let scale = field.max_abs();
    println!("\nascii preview (q right, p up):");
    for jb in (0..256 / 8).rev() {
        let mut line = String::new();
        for ib in 0..256 / 8 {
            let mut extreme = 0.0f64;
            for j in 0..8 {
                for i in 0..8 {
                    let v = field.get(ib * 8 + i, jb * 8 + j);
                    if v.abs() > extreme.abs() {
                        extreme = v;
                    }
                }
            }
            line.push(match extreme / scale {
                x if x > 0.35 => '#',
                x if x > 0.08 => '+',
                x if x < -0.08 => 'o',
                _ => '.',
            });
        }
        println!("  {line}");
    }
    Ok(())
}
