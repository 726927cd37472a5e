//! Error correction end to end: syndrome arithmetic, rake convolutions and
//! their variance algebra, the golden-ratio fixed point of iterated rounds,
//! ideal-ancilla projection with its logical flips, and the teleportation
//! circuit cross-checked against a direct three-mode trace.

use nalgebra::Vector2;
use proptest::prelude::*;

use gkp_phase::ec::{
    decode_syndrome, ec_ideal, ec_map, rake, rake_state, teleport_ec, three_mode_teleport_trace,
    AncillaSpec, Axis, RakeOrder, IDEAL_RENDER_BETA,
};
use gkp_phase::plane::Field2D;
use gkp_phase::states::{
    approx_state_wigner, bloch_from_wigner, ideal_state_wigner, Bloch4, NoiseSpec,
};
use gkp_phase::theta::LatticeSum;
use gkp_phase::{Error, Rect, DEFAULT_REL_TOL, SQRT_PI};

const GOLDEN: f64 = 1.618_033_988_749_894_8; // (1 + sqrt 5) / 2

/// Mixed encoded state at symmetric noise: its single carrier is the identity
/// comb, teeth on the full sqrt(pi) lattice in both quadratures.
fn identity_carrier(beta: f64) -> LatticeSum {
    let mixed = approx_state_wigner(
        Bloch4::logical(0.0, 0.0, 0.0),
        &NoiseSpec::symmetric(beta).unwrap(),
    )
    .unwrap();
    let terms = mixed.weighted_terms();
    assert_eq!(terms.len(), 1, "mixed state should expose only the identity carrier");
    terms.into_iter().next().unwrap()
}

/// Centred Gaussian test blob with independent quadrature variances.
fn blob(window: Rect, n: usize, v_q: f64, v_p: f64) -> Field2D {
    let mut f = Field2D::zeros(window, n, n).unwrap();
    for ip in 0..n {
        for iq in 0..n {
            let q = f.q_at(iq);
            let p = f.p_at(ip);
            let val = (-0.5 * q * q / v_q - 0.5 * p * p / v_p).exp();
            *f.values_mut().get_mut((ip, iq)).unwrap() = val;
        }
    }
    f
}

/// Second moments of a gridded density about its own mean.
fn grid_variances(f: &Field2D) -> (f64, f64) {
    let (mut m0, mut mq, mut mp, mut mqq, mut mpp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ip in 0..f.n_p() {
        let p = f.p_at(ip);
        for iq in 0..f.n_q() {
            let q = f.q_at(iq);
            let v = f.get(iq, ip);
            m0 += v;
            mq += v * q;
            mp += v * p;
            mqq += v * q * q;
            mpp += v * p * p;
        }
    }
    let (cq, cp) = (mq / m0, mp / m0);
    (mqq / m0 - cq * cq, mpp / m0 - cp * cp)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn max_abs(f: &Field2D) -> f64 {
    f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn max_diff(a: &Field2D, b: &Field2D) -> f64 {
    a.values()
        .iter()
        .zip(b.values().iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

// ---------------------------------------------------------------------------
// Syndrome arithmetic
// ---------------------------------------------------------------------------

#[test]
fn syndrome_decoding_splits_into_lattice_step_and_remainder() {
    let s = decode_syndrome(0.0, 0.0).unwrap();
    assert_eq!(s.nearest_vec(), Vector2::zeros());
    assert_eq!(s.rem_q(), 0.0);
    assert_eq!(s.rem_p(), 0.0);

    let s = decode_syndrome(2.0 * SQRT_PI + 0.3, -SQRT_PI + 0.4).unwrap();
    assert!((s.nearest_q() - 2.0 * SQRT_PI).abs() < 1e-12);
    assert!((s.nearest_p() + SQRT_PI).abs() < 1e-12);
    assert!((s.rem_q() - 0.3).abs() < 1e-12);
    assert!((s.rem_p() - 0.4).abs() < 1e-12);
    assert_eq!(s.m_vec(), Vector2::new(2.0 * SQRT_PI + 0.3, -SQRT_PI + 0.4));

    // The cell is half open: +sqrt(pi)/2 rounds up, -sqrt(pi)/2 stays put.
    let hi = decode_syndrome(0.5 * SQRT_PI, 0.0).unwrap();
    assert!((hi.nearest_q() - SQRT_PI).abs() < 1e-12);
    assert!((hi.rem_q() + 0.5 * SQRT_PI).abs() < 1e-12);
    let lo = decode_syndrome(-0.5 * SQRT_PI, 0.0).unwrap();
    assert_eq!(lo.nearest_q(), 0.0);
    assert!((lo.rem_q() + 0.5 * SQRT_PI).abs() < 1e-12);

    assert!(matches!(decode_syndrome(f64::NAN, 0.0), Err(Error::InvalidInput(_))));
    assert!(matches!(decode_syndrome(0.0, f64::INFINITY), Err(Error::InvalidInput(_))));
}

proptest! {
    #[test]
    fn syndrome_decomposition_is_exact_and_periodic(
        m_q in -20.0f64..20.0,
        m_p in -20.0f64..20.0,
    ) {
        let s = decode_syndrome(m_q, m_p).unwrap();
        prop_assert!((s.nearest_q() + s.rem_q() - m_q).abs() < 1e-12);
        prop_assert!((s.nearest_p() + s.rem_p() - m_p).abs() < 1e-12);
        prop_assert!(s.rem_q() >= -0.5 * SQRT_PI - 1e-12);
        prop_assert!(s.rem_q() < 0.5 * SQRT_PI + 1e-12);
        prop_assert!(s.rem_p() >= -0.5 * SQRT_PI - 1e-12);
        prop_assert!(s.rem_p() < 0.5 * SQRT_PI + 1e-12);
        let steps_q = s.nearest_q() / SQRT_PI;
        prop_assert!((steps_q - steps_q.round()).abs() < 1e-9);
        let steps_p = s.nearest_p() / SQRT_PI;
        prop_assert!((steps_p - steps_p.round()).abs() < 1e-9);
        // A stabilizer period added to the outcome moves the decoded step,
        // never the remainder.
        let shifted = decode_syndrome(m_q + 2.0 * SQRT_PI, m_p).unwrap();
        prop_assert!((shifted.rem_q() - s.rem_q()).abs() < 1e-9);
        prop_assert!((shifted.nearest_q() - s.nearest_q() - 2.0 * SQRT_PI).abs() < 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Ancilla resources
// ---------------------------------------------------------------------------

#[test]
fn ancilla_specs_gatekeep_their_noise() {
    assert!(matches!(
        AncillaSpec::approximate(NoiseSpec::new(0.01, 0.02, 0.0).unwrap()),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        AncillaSpec::approximate(NoiseSpec::new(0.01, 0.01, 0.3).unwrap()),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        AncillaSpec::approximate(NoiseSpec::symmetric(0.06).unwrap()),
        Err(Error::OutsideLowNoise(_))
    ));

    let anc = AncillaSpec::approximate(NoiseSpec::symmetric(0.01).unwrap()).unwrap();
    assert!(anc.noise().is_some());
    let plus = anc.plus_state().unwrap();
    let zero = anc.zero_state().unwrap();
    assert!((plus.total_mass(DEFAULT_REL_TOL).unwrap() - 1.0).abs() < 1e-10);
    assert!((zero.total_mass(DEFAULT_REL_TOL).unwrap() - 1.0).abs() < 1e-10);

    assert!(AncillaSpec::Ideal.noise().is_none());
    assert!(matches!(AncillaSpec::Ideal.plus_state(), Err(Error::InvalidInput(_))));
    assert!(matches!(AncillaSpec::Ideal.zero_state(), Err(Error::InvalidInput(_))));
}

// ---------------------------------------------------------------------------
// Rakes
// ---------------------------------------------------------------------------

#[test]
fn rake_state_sums_its_carriers() {
    let anc = AncillaSpec::approximate(NoiseSpec::symmetric(0.01).unwrap()).unwrap();
    let plus = anc.plus_state().unwrap();
    let window = Rect::centered(0.5 * SQRT_PI);
    let input = blob(window, 161, 0.015, 0.02);

    let total = rake_state(&input, &plus, Axis::Q).unwrap();
    let terms = plus.weighted_terms();
    assert_eq!(terms.len(), 2);
    let mut acc = rake(&input, &terms[0], Axis::Q).unwrap();
    let part = rake(&input, &terms[1], Axis::Q).unwrap();
    for (a, b) in acc.values_mut().iter_mut().zip(part.values().iter()) {
        *a += *b;
    }
    let diff = max_diff(&total, &acc);
    assert!(diff < 1e-14, "linearity over carriers should be exact, got {diff}");
}

#[test]
fn raking_contracts_the_measured_axis_and_blurs_its_conjugate() {
    let carrier = identity_carrier(0.01);
    let a = carrier.spike_cov()[(0, 0)];
    let e = carrier.envelope().unwrap().cov()[(0, 0)];
    // Central ancilla tooth as seen through the envelope: a Gaussian of
    // variance u (the envelope barely matters, u = a to one part in 1e4).
    let u = a * e / (a + e);

    let window = Rect::centered(0.5 * SQRT_PI);
    let (v_q, v_p) = (0.015, 0.02);
    let input = blob(window, 161, v_q, v_p);

    let raked_q = rake(&input, &carrier, Axis::Q).unwrap();
    let (vq1, vp1) = grid_variances(&raked_q);
    // Sharpened axis: three-Gaussian product blob x tooth x envelope.
    let expect_q = 1.0 / (1.0 / v_q + 1.0 / a + 1.0 / e);
    assert!(rel(vq1, expect_q) < 5e-5, "q variance {vq1} vs {expect_q}");
    // Conjugate axis: the measurement back-action adds the tooth variance.
    assert!(rel(vp1, v_p + u) < 5e-5, "p variance {vp1} vs {}", v_p + u);

    let raked_p = rake(&input, &carrier, Axis::P).unwrap();
    let (vq2, vp2) = grid_variances(&raked_p);
    let expect_p = 1.0 / (1.0 / v_p + 1.0 / a + 1.0 / e);
    assert!(rel(vp2, expect_p) < 5e-5, "p variance {vp2} vs {expect_p}");
    assert!(rel(vq2, v_q + u) < 5e-5, "q variance {vq2} vs {}", v_q + u);

    // Delta combs have no pointwise kernel to sample.
    let comb = ideal_state_wigner(Bloch4::logical(0.0, 0.0, 1.0)).unwrap();
    let term = comb.weighted_terms().into_iter().next().unwrap();
    assert!(matches!(rake(&input, &term, Axis::Q), Err(Error::InvalidInput(_))));
}

#[test]
fn iterated_rounds_converge_to_the_golden_ratio_variances() {
    let carrier = identity_carrier(0.01);
    let a = carrier.spike_cov()[(0, 0)];
    let e = carrier.envelope().unwrap().cov()[(0, 0)];
    let u = a * e / (a + e);

    let window = Rect::centered(0.5 * SQRT_PI);
    let mut field = blob(window, 161, 0.02, 0.02);
    // Scalar reference trajectory: each rake contracts its own axis
    // harmonically against the enveloped tooth and adds u to the other.
    let (mut sv_q, mut sv_p) = (0.02, 0.02);

    for round in 0..6 {
        field = rake(&field, &carrier, Axis::Q).unwrap();
        sv_q = 1.0 / (1.0 / sv_q + 1.0 / a + 1.0 / e);
        sv_p += u;
        field = rake(&field, &carrier, Axis::P).unwrap();
        sv_p = 1.0 / (1.0 / sv_p + 1.0 / a + 1.0 / e);
        sv_q += u;
        let mass = field.integrate();
        field.scale(1.0 / mass);
        let (gv_q, gv_p) = grid_variances(&field);
        assert!(rel(gv_q, sv_q) < 1e-4, "round {round}: grid q {gv_q} vs scalar {sv_q}");
        assert!(rel(gv_p, sv_p) < 1e-4, "round {round}: grid p {gv_p} vs scalar {sv_p}");
    }

    let (gv_q, gv_p) = grid_variances(&field);
    assert!(rel(gv_q, GOLDEN * a) < 3e-4, "q fixed point {gv_q} vs {}", GOLDEN * a);
    assert!(rel(gv_p, a / GOLDEN) < 3e-4, "p fixed point {gv_p} vs {}", a / GOLDEN);
    // The quadratures split by exactly phi^2 = phi + 1 at the fixed point.
    assert!((gv_q / gv_p - (GOLDEN + 1.0)).abs() < 2e-3);
}

// ---------------------------------------------------------------------------
// Full correction map
// ---------------------------------------------------------------------------

#[test]
fn correction_keeps_a_code_state_and_weighs_outcomes() {
    // Grid Bloch overlaps are only unbiased when the window holds the whole
    // envelope (a clipped window keeps different site counts of the four
    // combs), so use beta = 0.04 with its compact 3.5-sigma envelope, and
    // align the grid so every comb site falls exactly on a cell center:
    // pitch sqrt(pi)/16, window offset by half a cell.
    let noise = NoiseSpec::symmetric(0.04).unwrap();
    let anc = AncillaSpec::approximate(noise).unwrap();
    let state = approx_state_wigner(Bloch4::logical(0.0, 0.0, 1.0), &noise).unwrap();
    let h = SQRT_PI / 16.0;
    let n = 257usize;
    let lo = -8.0 * SQRT_PI - 0.5 * h;
    let hi = lo + n as f64 * h;
    let window = Rect { q_min: lo, q_max: hi, p_min: lo, p_max: hi };
    let input = state.sample(window, n, n, DEFAULT_REL_TOL).unwrap();
    let b_in = bloch_from_wigner(&input).unwrap();
    assert!((b_in.r[3] - 1.0).abs() < 1e-3, "recovered input z: {}", b_in.r[3]);

    let aligned = decode_syndrome(0.0, 0.0).unwrap();
    let (out, weight) = ec_map(&input, &anc, &aligned, RakeOrder::QThenP).unwrap();
    assert!((out.integrate() - 1.0).abs() < 1e-12, "corrected output is renormalized");
    let b_out = bloch_from_wigner(&out).unwrap();
    assert!(b_out.r[3] > 0.99, "logical z after correction: {}", b_out.r[3]);
    assert!((b_out.r[3] - b_in.r[3]).abs() < 5e-3);
    assert!(b_out.r[1].abs() < 0.015 && b_out.r[2].abs() < 0.015);
    assert!(weight.is_finite() && weight > 0.0);

    // An offset outcome is less likely than the aligned one for a code state.
    let offset = decode_syndrome(0.25, -0.2).unwrap();
    let (_, weight_off) = ec_map(&input, &anc, &offset, RakeOrder::QThenP).unwrap();
    assert!(weight_off > 0.0 && weight_off < weight, "{weight_off} vs {weight}");

    // The two rake orders mirror the output spike shapes (the axis measured
    // last is the sharper one — a first-order effect), but their logical
    // content and aligned-outcome weight agree to second order in the noise.
    let (out_pq, weight_pq) = ec_map(&input, &anc, &aligned, RakeOrder::PThenQ).unwrap();
    let b_pq = bloch_from_wigner(&out_pq).unwrap();
    assert!((b_pq.r[3] - b_out.r[3]).abs() < 2e-3, "{} vs {}", b_pq.r[3], b_out.r[3]);
    assert!((weight_pq - weight).abs() < 1e-3 * weight, "{weight_pq} vs {weight}");
    let diff = max_diff(&out, &out_pq);
    let peak = max_abs(&out);
    assert!(diff > 0.1 * peak, "orders should differ visibly in shape: {diff} vs {peak}");

    assert!(matches!(
        ec_map(&input, &AncillaSpec::Ideal, &aligned, RakeOrder::QThenP),
        Err(Error::InvalidInput(_))
    ));
}

// ---------------------------------------------------------------------------
// Ideal-ancilla projection
// ---------------------------------------------------------------------------

#[test]
fn ideal_projection_recovers_logicals_and_books_the_flips() {
    let noise = NoiseSpec::symmetric(0.01).unwrap();
    let state = approx_state_wigner(Bloch4::logical(0.3, -0.2, 0.5), &noise).unwrap();

    let s0 = decode_syndrome(0.0, 0.0).unwrap();
    let (b0, projected) = ec_ideal(&state, &s0).unwrap();
    assert!((b0.r[1] - 0.3).abs() < 1e-6);
    assert!((b0.r[2] + 0.2).abs() < 1e-6);
    assert!((b0.r[3] - 0.5).abs() < 1e-6);
    assert!(projected.is_comb());

    // A full-period shift in q flips the overlaps that anticommute with it
    // (z and y); one in p flips x and y; the diagonal shift flips x and z.
    let (bx, _) = ec_ideal(&state, &decode_syndrome(SQRT_PI, 0.0).unwrap()).unwrap();
    assert!((bx.r[1] - b0.r[1]).abs() < 1e-9);
    assert!((bx.r[2] + b0.r[2]).abs() < 1e-9);
    assert!((bx.r[3] + b0.r[3]).abs() < 1e-9);
    let (bz, _) = ec_ideal(&state, &decode_syndrome(0.0, SQRT_PI).unwrap()).unwrap();
    assert!((bz.r[1] + b0.r[1]).abs() < 1e-9);
    assert!((bz.r[2] + b0.r[2]).abs() < 1e-9);
    assert!((bz.r[3] - b0.r[3]).abs() < 1e-9);
    let (by, _) = ec_ideal(&state, &decode_syndrome(SQRT_PI, SQRT_PI).unwrap()).unwrap();
    assert!((by.r[1] + b0.r[1]).abs() < 1e-9);
    assert!((by.r[2] - b0.r[2]).abs() < 1e-9);
    assert!((by.r[3] + b0.r[3]).abs() < 1e-9);

    // Small remainders leave the projected logical untouched: the common
    // tooth damping cancels in the normalized overlap ratios.
    let (br, _) = ec_ideal(&state, &decode_syndrome(0.25, -0.2).unwrap()).unwrap();
    assert!((br.r[1] - b0.r[1]).abs() < 1e-5);
    assert!((br.r[2] - b0.r[2]).abs() < 1e-5);
    assert!((br.r[3] - b0.r[3]).abs() < 1e-5);

    // The projected output is a delta comb with no support radius; a second
    // projection must refuse rather than guess a window.
    assert!(matches!(ec_ideal(&projected, &s0), Err(Error::WindowCoverage(_))));
}

// ---------------------------------------------------------------------------
// Teleportation
// ---------------------------------------------------------------------------

#[test]
fn teleportation_with_ideal_ancillas_projects_and_redresses() {
    let noise = NoiseSpec::symmetric(0.01).unwrap();
    let state = approx_state_wigner(Bloch4::logical(0.3, -0.2, 0.5), &noise).unwrap();
    let window = Rect::centered(1.75 * SQRT_PI);
    let input = state.sample(window, 221, 221, DEFAULT_REL_TOL).unwrap();
    let b_grid = bloch_from_wigner(&input).unwrap();

    let (b0, field0) = teleport_ec(&input, Vector2::zeros(), &AncillaSpec::Ideal).unwrap();
    for i in 0..4 {
        assert!((b0.r[i] - b_grid.r[i]).abs() < 1e-12, "component {i}");
    }

    // The returned field is the projection redressed at the rendering noise.
    let redressed = approx_state_wigner(b0, &NoiseSpec::symmetric(IDEAL_RENDER_BETA).unwrap())
        .unwrap()
        .sample(window, 221, 221, DEFAULT_REL_TOL)
        .unwrap();
    let diff = max_diff(&field0, &redressed);
    assert!(diff < 1e-12, "rendered field differs from its definition by {diff}");

    // A Bell outcome half a lattice step out books the logical flip exactly:
    // the scaled shift sqrt(2) m lands on a full sqrt(pi) translation.
    let m_flip = Vector2::new(SQRT_PI / std::f64::consts::SQRT_2, 0.0);
    let (b_flip, _) = teleport_ec(&input, m_flip, &AncillaSpec::Ideal).unwrap();
    assert!((b_flip.r[1] - b0.r[1]).abs() < 1e-9);
    assert!((b_flip.r[2] + b0.r[2]).abs() < 1e-9);
    assert!((b_flip.r[3] + b0.r[3]).abs() < 1e-9);
}

#[test]
fn teleportation_and_the_three_mode_trace_agree() {
    let anc = AncillaSpec::approximate(NoiseSpec::symmetric(0.01).unwrap()).unwrap();
    let window = Rect::centered(1.75 * SQRT_PI);
    let n = 221;
    let mut vacuum = Field2D::zeros(window, n, n).unwrap();
    for ip in 0..n {
        for iq in 0..n {
            let q = vacuum.q_at(iq);
            let p = vacuum.p_at(ip);
            *vacuum.values_mut().get_mut((ip, iq)).unwrap() =
                std::f64::consts::FRAC_1_PI * (-(q * q) - p * p).exp();
        }
    }

    let m = Vector2::new(0.12, -0.08);
    let (bloch, raked) = teleport_ec(&vacuum, m, &anc).unwrap();
    let traced = three_mode_teleport_trace(&vacuum, &anc, m).unwrap();

    // Two derivations of the same channel on deliberately different
    // discretizations; agreement is far inside the grid error budget.
    let peak = max_abs(&raked);
    let diff = max_diff(&raked, &traced);
    assert!(diff < 1e-4 * peak, "route disagreement {diff} against peak {peak}");

    // Teleporting the vacuum prepares (a slightly shift-biased copy of) the
    // Hadamard-axis state: strong equal x and z overlaps.
    assert!(bloch.r[1] > 0.5 && bloch.r[3] > 0.5, "axis {:?}", bloch.r);
    assert!(bloch.r[2].abs() < 0.2, "y component {}", bloch.r[2]);
}

#[test]
fn teleportation_guards_reject_bad_resources_and_oversized_traces() {
    let window = Rect::centered(1.75 * SQRT_PI);
    let anc = AncillaSpec::approximate(NoiseSpec::symmetric(0.01).unwrap()).unwrap();

    let small = Field2D::zeros(window, 32, 32).unwrap();
    assert!(matches!(
        three_mode_teleport_trace(&small, &AncillaSpec::Ideal, Vector2::zeros()),
        Err(Error::InvalidInput(_))
    ));

    // An all-zero input has no mass on any branch.
    let aligned = decode_syndrome(0.0, 0.0).unwrap();
    assert!(matches!(
        ec_map(&small, &anc, &aligned, RakeOrder::QThenP),
        Err(Error::ProbabilityFloor(_, _))
    ));

    // The factorized trace intermediates are bounded; a grid just over the
    // limit must refuse before allocating them.
    let big = Field2D::zeros(window, 2898, 2898).unwrap();
    assert!(matches!(
        three_mode_teleport_trace(&big, &anc, Vector2::zeros()),
        Err(Error::MemoryGuard(_))
    ));
}
