//! Phase-plane calculus: blur/deblur roundtrips, symplectic maps and their
//! action on lattice sums (including the Clifford permutation of the Pauli
//! combs), and the grid sampling / integration layer.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use proptest::prelude::*;

use gkp_phase::plane::{
    apply_symplectic, blur, blur_low_noise, deblur, sample_field, symplectic_for_gate,
    symplectic_form, Field2D, Gate, Gaussian2D, SymplecticMap, WignerFn,
};
use gkp_phase::states::{pauli_wigner, PauliIndex};
use gkp_phase::theta::{Characteristics, LatticeSum};
use gkp_phase::{Error, Rect, DEFAULT_REL_TOL, SQRT_PI, TRACE_FACTOR};

fn spiky_sum() -> LatticeSum {
    LatticeSum::theta(
        Matrix2::identity() * SQRT_PI,
        Characteristics::zero(),
        Matrix2::new(0.04, 0.01, 0.01, 0.03),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Gaussians and grids
// ---------------------------------------------------------------------------

#[test]
fn vacuum_gaussian_peak_and_mass() {
    let vac = Gaussian2D::vacuum();
    assert!((vac.eval(Vector2::zeros()) - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
    // Odd resolution puts a cell center exactly on the origin peak.
    let field = Field2D::tabulate(&vac, Rect::centered(6.0), 255, 255).unwrap();
    assert!((field.integrate() - 1.0).abs() < 1e-9);
    assert!((field.max_abs() - std::f64::consts::FRAC_1_PI).abs() < 1e-12);
}

#[test]
fn vacuum_purity_fixes_trace_constant() {
    // 2 pi * integral W_vac^2 = 1 pins the trace convention.
    let vac = Gaussian2D::vacuum();
    let field = Field2D::tabulate(&vac, Rect::centered(6.0), 512, 512).unwrap();
    let purity = TRACE_FACTOR * field.inner_product(&field).unwrap();
    assert!((purity - 1.0).abs() < 1e-6, "purity {purity}");
}

#[test]
fn grid_geometry_and_interp() {
    let mut field = Field2D::zeros(Rect::centered(2.0), 8, 4).unwrap();
    assert_eq!(field.n_q(), 8);
    assert_eq!(field.n_p(), 4);
    assert!((field.dq() - 0.5).abs() < 1e-15);
    assert!((field.dp() - 1.0).abs() < 1e-15);
    assert!((field.q_at(0) + 1.75).abs() < 1e-15);
    assert!((field.p_at(3) - 1.5).abs() < 1e-15);
    field.values_mut()[(1, 2)] = 2.0; // p row 1, q column 2
    assert_eq!(field.get(2, 1), 2.0);
    // Interpolating exactly on the cell center returns the sample; outside is 0.
    assert!((field.interp(Vector2::new(field.q_at(2), field.p_at(1))) - 2.0).abs() < 1e-12);
    assert_eq!(field.interp(Vector2::new(50.0, 0.0)), 0.0);
}

#[test]
fn translate_whole_cells_is_exact_roll() {
    let g = Gaussian2D::new(Vector2::new(0.5, -0.25), Matrix2::identity() * 0.3).unwrap();
    let field = Field2D::tabulate(&g, Rect::centered(4.0), 64, 64).unwrap();
    let dq = field.dq();
    let shifted = field.translate(Vector2::new(3.0 * dq, 0.0));
    // shifted(x) = field(x + 3 dq): compare against directly tabulated values.
    for ip in [0usize, 20, 63] {
        for iq in [0usize, 5, 40] {
            let x = Vector2::new(shifted.q_at(iq) + 3.0 * dq, shifted.p_at(ip));
            let direct = if x[0] <= field.window().q_max { g.eval(x) } else { 0.0 };
            assert!((shifted.get(iq, ip) - direct).abs() < 1e-12);
        }
    }
}

#[test]
fn translate_fractional_uses_interpolation() {
    let g = Gaussian2D::isotropic(0.5).unwrap();
    let field = Field2D::tabulate(&g, Rect::centered(4.0), 128, 128).unwrap();
    let shift = Vector2::new(0.3 * field.dq(), 0.0);
    let shifted = field.translate(shift);
    // Coarse agreement with the analytic shift (bilinear error ~ h^2).
    let x = Vector2::new(0.4, 0.2);
    assert!((shifted.interp(x) - g.eval(x + shift)).abs() < 1e-3);
}

#[test]
fn sample_field_rejects_non_hermitian_weights() {
    let term = spiky_sum().scaled(Complex64::new(0.0, 1.0));
    let err = sample_field(&[term], Rect::centered(3.0), 32, 32, DEFAULT_REL_TOL).unwrap_err();
    assert!(matches!(err, Error::HermiticityResidue { .. }));
}

#[test]
fn sample_field_rejects_combs() {
    let comb = LatticeSum::comb(Matrix2::identity() * SQRT_PI, Characteristics::zero()).unwrap();
    assert!(sample_field(&[comb], Rect::centered(3.0), 32, 32, DEFAULT_REL_TOL).is_err());
}

// ---------------------------------------------------------------------------
// Blur / deblur
// ---------------------------------------------------------------------------

#[test]
fn blur_deblur_roundtrip_is_exact_on_dyadic_covariances() {
    let ls = LatticeSum::theta(
        Matrix2::identity() * SQRT_PI,
        Characteristics::zero(),
        Matrix2::new(0.25, 0.0625, 0.0625, 0.5),
    )
    .unwrap();
    let sigma = Matrix2::new(0.125, 0.03125, 0.03125, 0.25);
    let round = deblur(&blur(&ls, &sigma).unwrap(), &sigma).unwrap();
    // Dyadic entries add and subtract without rounding: bit-exact.
    assert_eq!(round.spike_cov(), ls.spike_cov());
    assert_eq!(round.chars(), ls.chars());
    assert_eq!(round.prefactor(), ls.prefactor());
}

#[test]
fn blur_comb_gives_theta_and_deblur_returns_comb() {
    let comb = LatticeSum::comb(Matrix2::identity() * SQRT_PI, Characteristics::zero()).unwrap();
    let sigma = Matrix2::identity() * 0.02;
    let blurred = blur(&comb, &sigma).unwrap();
    assert!(!blurred.is_comb());
    assert_eq!(blurred.spike_cov(), sigma);
    let back = deblur(&blurred, &sigma).unwrap();
    assert!(back.is_comb());
}

#[test]
fn deblur_past_zero_leaves_siegel_space() {
    let ls = spiky_sum();
    let too_much = Matrix2::identity() * 10.0;
    assert!(matches!(deblur(&ls, &too_much), Err(Error::SiegelUpperHalfSpace(_))));
}

#[test]
fn enveloped_blur_needs_explicit_low_noise_path() {
    let env = Gaussian2D::isotropic(12.5).unwrap();
    let ls = LatticeSum::new(
        Matrix2::identity() * SQRT_PI,
        Characteristics::zero(),
        Matrix2::identity() * 0.005,
        Some(env),
        Complex64::new(1.0, 0.0),
    )
    .unwrap();
    let sigma = Matrix2::identity() * 0.001;
    assert!(matches!(blur(&ls, &sigma), Err(Error::EnvelopedBlur)));
    let soft = blur_low_noise(&ls, &sigma).unwrap();
    assert_eq!(soft.spike_cov(), Matrix2::identity() * 0.006);
    assert!(soft.envelope().is_some());
}

#[test]
fn blur_preserves_total_integral() {
    // Convolution with a normalized Gaussian cannot change the integral. On
    // the unphased periodic sum the window (a whole number of cells) sees
    // this exactly: the integral is the number of cells times sqrt(pi).
    let ls = LatticeSum::theta(
        Matrix2::identity() * SQRT_PI,
        Characteristics::zero(),
        Matrix2::identity() * 0.005,
    )
    .unwrap();
    let window = Rect::centered(4.0 * SQRT_PI);
    let before = sample_field(&[ls.clone()], window, 512, 512, DEFAULT_REL_TOL)
        .unwrap()
        .integrate();
    let blurred = blur(&ls, &(Matrix2::identity() * 0.002)).unwrap();
    let after = sample_field(&[blurred], window, 512, 512, DEFAULT_REL_TOL)
        .unwrap()
        .integrate();
    let exact = 64.0 * SQRT_PI;
    assert!((before - exact).abs() < 1e-9 * exact, "before {before} vs {exact}");
    assert!((before - after).abs() < 1e-9 * exact, "{before} vs {after}");
}

// ---------------------------------------------------------------------------
// Symplectic maps
// ---------------------------------------------------------------------------

#[test]
fn gate_matrices_are_the_standard_ones() {
    let f = symplectic_for_gate(Gate::Fourier);
    assert_eq!(f.s2().unwrap(), Matrix2::new(0.0, -1.0, 1.0, 0.0));
    let p = symplectic_for_gate(Gate::Shear);
    assert_eq!(p.s2().unwrap(), Matrix2::new(1.0, 0.0, 1.0, 1.0));
    let r0 = symplectic_for_gate(Gate::Rotation(0.0));
    assert_eq!(r0.s2().unwrap(), Matrix2::identity());
    // Fourier is the quarter rotation.
    let rq = symplectic_for_gate(Gate::Rotation(std::f64::consts::FRAC_PI_2));
    assert!((rq.s2().unwrap() - f.s2().unwrap()).norm() < 1e-15);

    for gate in [Gate::BeamSplitter, Gate::Cx, Gate::Cz] {
        let m = symplectic_for_gate(gate);
        let omega = symplectic_form(2);
        let residue = (m.s().transpose() * &omega * m.s() - &omega).abs().max();
        assert!(residue < 1e-14);
    }

    // Sum gate moves q1 onto q2 and kicks p1 back.
    let cx = symplectic_for_gate(Gate::Cx);
    let out = cx.apply_point(&DVector::from_vec(vec![1.0, 0.5, 0.25, -0.75]));
    assert_eq!(out.as_slice(), &[1.0, 1.25, 1.25, -0.75]);
    // Controlled phase adds each q onto the other mode's p.
    let cz = symplectic_for_gate(Gate::Cz);
    let out = cz.apply_point(&DVector::from_vec(vec![1.0, 0.5, 0.25, -0.75]));
    assert_eq!(out.as_slice(), &[1.0, 0.75, 0.25, 0.25]);
    // Beamsplitter: difference on mode 1, sum on mode 2.
    let bs = symplectic_for_gate(Gate::BeamSplitter);
    let out = bs.apply_point(&DVector::from_vec(vec![1.0, 0.0, 3.0, 0.0]));
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((out[0] - (1.0 - 3.0) * r).abs() < 1e-14);
    assert!((out[2] - (1.0 + 3.0) * r).abs() < 1e-14);
}

#[test]
fn non_symplectic_matrices_are_rejected() {
    let bad = DMatrix::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 0.0 });
    assert!(SymplecticMap::new(bad, DVector::zeros(2)).is_err());
    let odd = DMatrix::identity(3, 3);
    assert!(SymplecticMap::new(odd, DVector::zeros(3)).is_err());
}

#[test]
fn compose_and_inverse_roundtrip() {
    let f = symplectic_for_gate(Gate::Fourier);
    let shift = SymplecticMap::displacement(Vector2::new(0.3, -0.7));
    let both = shift.compose(&f).unwrap();
    let x = DVector::from_vec(vec![0.2, 0.9]);
    let via_steps = shift.apply_point(&f.apply_point(&x));
    assert!((both.apply_point(&x) - &via_steps).abs().max() < 1e-14);
    let inv = both.inverse();
    let id = inv.compose(&both).unwrap();
    assert!((id.apply_point(&x) - &x).abs().max() < 1e-13);
}

// ---------------------------------------------------------------------------
// Symplectic action on lattice sums
// ---------------------------------------------------------------------------

/// Transformed sums must satisfy W'(x) = W(S^{-1}(x - c)) pointwise.
fn assert_pushforward(ls: &LatticeSum, map: &SymplecticMap) {
    let moved = apply_symplectic(ls, map).unwrap();
    let inv = map.inverse();
    let s_inv = inv.s2().unwrap();
    let c_inv = inv.c2().unwrap();
    for x in [
        Vector2::new(0.0, 0.0),
        Vector2::new(0.31, -0.77),
        Vector2::new(-1.4, 2.2),
        Vector2::new(SQRT_PI, 0.5),
    ] {
        let lhs = moved.eval(x, 1e-13).unwrap();
        let rhs = ls.eval(s_inv * x + c_inv, 1e-13).unwrap();
        assert!(
            (lhs - rhs).norm() <= 1e-9 * lhs.norm().max(1e-10),
            "pushforward mismatch at {x:?}: {lhs} vs {rhs}"
        );
    }
}

#[test]
fn symplectic_action_is_the_pushforward() {
    let ls = spiky_sum();
    for gate in [Gate::Fourier, Gate::Shear, Gate::Rotation(0.3)] {
        assert_pushforward(&ls, &symplectic_for_gate(gate));
    }
    // Lattice-commensurate displacement.
    let quarter_cell = SymplecticMap::displacement(Vector2::new(0.25 * SQRT_PI, 0.0));
    assert_pushforward(&ls, &quarter_cell);
    // Shear followed by displacement (affine composite).
    let affine = quarter_cell.compose(&symplectic_for_gate(Gate::Shear)).unwrap();
    assert_pushforward(&ls, &affine);
}

#[test]
fn symplectic_composition_matches_sequential_application() {
    let ls = spiky_sum();
    let t1 = symplectic_for_gate(Gate::Shear);
    let t2 = symplectic_for_gate(Gate::Fourier);
    let seq = apply_symplectic(&apply_symplectic(&ls, &t1).unwrap(), &t2).unwrap();
    let composed = apply_symplectic(&ls, &t2.compose(&t1).unwrap()).unwrap();
    for x in [Vector2::new(0.1, 0.2), Vector2::new(-0.9, 1.3)] {
        let a = seq.eval(x, 1e-13).unwrap();
        let b = composed.eval(x, 1e-13).unwrap();
        assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-10));
    }
}

#[test]
fn irrational_displacement_is_refused() {
    // A displacement that is no small-denominator fraction of the lattice
    // cannot be folded into exact characteristics.
    let ls = spiky_sum();
    let bad = SymplecticMap::displacement(Vector2::new(0.1234567, 0.0));
    assert!(apply_symplectic(&ls, &bad).is_err());
}

/// Compare a transformed Pauli comb with an expected Pauli comb up to a sign:
/// same lattice, same canonical characteristics, prefactor ratio = sign.
fn assert_is_signed_pauli(got: &LatticeSum, mu: PauliIndex, sign: f64) {
    let want = pauli_wigner(mu, got.spike_cov(), None).unwrap();
    assert_eq!(got.lattice(), want.lattice());
    assert_eq!(got.chars(), want.chars(), "characteristics mismatch for {mu:?}");
    let ratio = got.prefactor() / want.prefactor();
    assert!((ratio - Complex64::new(sign, 0.0)).norm() < 1e-12, "sign {ratio} != {sign}");
}

#[test]
fn fourier_permutes_paulis_like_hadamard() {
    // H: X -> Z, Z -> X, Y -> -Y.
    let map = symplectic_for_gate(Gate::Fourier);
    let spike = Matrix2::identity() * 0.01;
    let table = [
        (PauliIndex::I, PauliIndex::I, 1.0),
        (PauliIndex::X, PauliIndex::Z, 1.0),
        (PauliIndex::Y, PauliIndex::Y, -1.0),
        (PauliIndex::Z, PauliIndex::X, 1.0),
    ];
    for (from, to, sign) in table {
        let moved = apply_symplectic(&pauli_wigner(from, spike, None).unwrap(), &map).unwrap();
        assert_is_signed_pauli(&moved, to, sign);
    }
}

#[test]
fn shear_permutes_paulis_like_phase_gate() {
    // S: X -> Y, Y -> -X, Z -> Z.
    let map = symplectic_for_gate(Gate::Shear);
    let spike = Matrix2::identity() * 0.01;
    let table = [
        (PauliIndex::I, PauliIndex::I, 1.0),
        (PauliIndex::X, PauliIndex::Y, 1.0),
        (PauliIndex::Y, PauliIndex::X, -1.0),
        (PauliIndex::Z, PauliIndex::Z, 1.0),
    ];
    for (from, to, sign) in table {
        let moved = apply_symplectic(&pauli_wigner(from, spike, None).unwrap(), &map).unwrap();
        // The shear skews the spike covariance; compare characteristics only,
        // then rebuild the expectation with the transformed covariance.
        let want = pauli_wigner(to, moved.spike_cov(), None).unwrap();
        assert_eq!(moved.chars(), want.chars(), "{from:?} -> {to:?}");
        let ratio = moved.prefactor() / want.prefactor();
        assert!((ratio - Complex64::new(sign, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn logical_x_displacement_flips_anticommuting_combs() {
    // Displacement by sqrt(pi) (1, 0) is a logical X: Z and Y combs change
    // sign, I and X are untouched.
    let map = SymplecticMap::displacement(Vector2::new(SQRT_PI, 0.0));
    let spike = Matrix2::identity() * 0.01;
    let table = [
        (PauliIndex::I, 1.0),
        (PauliIndex::X, 1.0),
        (PauliIndex::Y, -1.0),
        (PauliIndex::Z, -1.0),
    ];
    for (mu, sign) in table {
        let moved = apply_symplectic(&pauli_wigner(mu, spike, None).unwrap(), &map).unwrap();
        assert_is_signed_pauli(&moved, mu, sign);
    }
}

#[test]
fn stabilizer_displacement_acts_trivially() {
    // 2 sqrt(pi) shifts are stabilizers: every Pauli comb returns unchanged.
    let map = SymplecticMap::displacement(Vector2::new(2.0 * SQRT_PI, -2.0 * SQRT_PI));
    let spike = Matrix2::identity() * 0.01;
    for mu in PauliIndex::ALL {
        let moved = apply_symplectic(&pauli_wigner(mu, spike, None).unwrap(), &map).unwrap();
        assert_is_signed_pauli(&moved, mu, 1.0);
    }
}

#[test]
fn fourier_on_comb_acts_on_support() {
    // On delta combs the same permutation is visible in the enumerated
    // support: transformed Z comb support equals the X comb support with
    // identical weights.
    let map = symplectic_for_gate(Gate::Fourier);
    let z = pauli_wigner(PauliIndex::Z, Matrix2::zeros(), None).unwrap();
    let x = pauli_wigner(PauliIndex::X, Matrix2::zeros(), None).unwrap();
    let moved = apply_symplectic(&z, &map).unwrap();
    let window = Rect::centered(2.4 * SQRT_PI);
    let a = moved.sha_support(window).unwrap();
    let b = x.sha_support(window).unwrap();
    assert_eq!(a.len(), b.len());
    for ((xa, wa), (xb, wb)) in a.iter().zip(b.iter()) {
        assert!((xa - xb).norm() < 1e-12);
        assert!((wa - wb).norm() < 1e-12);
    }
}

#[test]
fn support_radius_reports_window_and_envelope() {
    let g = Gaussian2D::vacuum();
    assert!(g.support_radius().unwrap() > 6.0 * 0.5f64.sqrt());
    let field = Field2D::zeros(Rect::centered(3.0), 16, 16).unwrap();
    let r = field.support_radius().unwrap();
    assert!((r - (18.0f64).sqrt()).abs() < 1e-12);
    // Envelope-free lattice sums have unbounded support.
    assert!(spiky_sum().support_radius().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn blur_then_deblur_recovers_covariance(
        a in 0.01f64..0.5,
        d in 0.01f64..0.5,
        b in -0.05f64..0.05,
        ba in 0.01f64..0.5,
        bd in 0.01f64..0.5,
    ) {
        prop_assume!(a * d > b * b + 1e-6);
        let ls = LatticeSum::theta(
            Matrix2::identity() * SQRT_PI,
            Characteristics::zero(),
            Matrix2::new(a, b, b, d),
        ).unwrap();
        let sigma = Matrix2::new(ba, 0.0, 0.0, bd);
        let round = deblur(&blur(&ls, &sigma).unwrap(), &sigma).unwrap();
        let diff = (round.spike_cov() - ls.spike_cov()).abs().max();
        prop_assert!(diff < 1e-15, "residual {diff}");
    }

    #[test]
    fn blur_twice_equals_blur_of_sum(
        s1 in 0.005f64..0.2,
        s2 in 0.005f64..0.2,
    ) {
        let comb = LatticeSum::comb(Matrix2::identity() * SQRT_PI, Characteristics::zero()).unwrap();
        let twice = blur(&blur(&comb, &(Matrix2::identity() * s1)).unwrap(),
                         &(Matrix2::identity() * s2)).unwrap();
        let once = blur(&comb, &(Matrix2::identity() * (s1 + s2))).unwrap();
        let x = Vector2::new(0.4, -0.2);
        let a = twice.eval(x, 1e-13).unwrap();
        let b = once.eval(x, 1e-13).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-12));
    }

    #[test]
    fn random_clifford_words_keep_pauli_structure(word in proptest::collection::vec(0u8..3, 1..6)) {
        // Any word in {Fourier, Shear, sqrt(pi)-displacement} maps each Pauli
        // comb to a signed Pauli comb: characteristics stay in the quarter
        // lattice and prefactors stay +-1.
        let spike = Matrix2::identity() * 0.01;
        let mut objects: Vec<LatticeSum> = PauliIndex::ALL
            .iter()
            .map(|&mu| pauli_wigner(mu, spike, None).unwrap())
            .collect();
        for &g in &word {
            let map = match g {
                0 => symplectic_for_gate(Gate::Fourier),
                1 => symplectic_for_gate(Gate::Shear),
                _ => SymplecticMap::displacement(Vector2::new(SQRT_PI, 0.0)),
            };
            for obj in &mut objects {
                *obj = apply_symplectic(obj, &map).unwrap();
            }
        }
        for obj in &objects {
            let pref = obj.prefactor();
            prop_assert!((pref.norm() - 1.0).abs() < 1e-12);
            prop_assert!(pref.im.abs() < 1e-12, "non-real sign {pref}");
            let chars = obj.chars();
            for part in chars.v1.iter().chain(chars.v2.iter()) {
                prop_assert!(*part.denom() == 1 || *part.denom() == 2,
                    "characteristic denominator {} escaped the Pauli set", part.denom());
            }
        }
    }
}
