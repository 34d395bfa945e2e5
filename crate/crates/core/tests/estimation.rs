use std::f64::consts::{PI, TAU};

use hyperent::certification::{solve, Constraint, ConstraintKind, SdpProblem, SolverStatus};
use hyperent::estimation::{
    balance_from_spectra, concurrence_bound, default_windows, fit_fringe,
    polarization_fidelity_bound, raw_visibility, restricted_rho, visibility_fidelity_bound,
    BinWindow, RestrictedState, Spectrum, SpectrumHistogram,
};
use hyperent::hom::{
    fringe_model_prob, hom_povm_prob, sample_scan, FringeModelParams, FringeScan, ScanPoint,
};
use hyperent::linalg::{bell, concurrence, fidelity_pure, kron, pauli, CMatrix};
use hyperent::random;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn delays(n: usize, half: f64) -> Vec<f64> {
    (0..n)
        .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
        .collect()
}

fn noiseless_scan(params: &FringeModelParams, taus: &[f64], pairs: u64) -> FringeScan {
    let pts = taus
        .iter()
        .map(|&t| {
            let n = (pairs as f64 * fringe_model_prob(t, params)).round() as u64;
            ScanPoint::new(t, n, pairs).unwrap()
        })
        .collect();
    FringeScan::new(pts, None).unwrap()
}

fn xx() -> CMatrix {
    kron(&pauli::x(), &pauli::x())
}

fn zz() -> CMatrix {
    kron(&pauli::z(), &pauli::z())
}

#[test]
fn restricted_block_round_trip() {
    let truth = FringeModelParams::reported();
    let fit = fit_fringe(&noiseless_scan(
        &truth,
        &delays(400, 3.0),
        1_000_000_000_000,
    ))
    .unwrap();
    let p = 0.52;
    let expected =
        restricted_rho(&RestrictedState::new(p, truth.visibility, truth.phase).unwrap()).unwrap();
    let fitted =
        restricted_rho(&RestrictedState::new(p, fit.params.visibility, fit.params.phase).unwrap())
            .unwrap();
    for i in 1..3 {
        for j in 1..3 {
            assert!((expected.get(i, j) - fitted.get(i, j)).norm() < 1e-6);
        }
    }
    let raw = raw_visibility(&noiseless_scan(&truth, &delays(400, 3.0), 10_000)).unwrap();
    assert!(raw <= fit.params.visibility);
}

#[test]
fn full_visibility_fit_converges_on_bound() {
    let truth = FringeModelParams {
        visibility: 1.0,
        ..FringeModelParams::reported()
    };
    let taus = delays(401, 6.0);
    let fit = fit_fringe(&noiseless_scan(&truth, &taus, 1_000_000_000_000)).unwrap();
    assert!((fit.params.visibility - 1.0).abs() < 1e-6);
    for seed in 0..5 {
        let scan = sample_scan(|t| fringe_model_prob(t, &truth), &taus, 10_000, seed).unwrap();
        let fit = fit_fringe(&scan).unwrap();
        assert!(
            fit.converged && fit.params.visibility > 0.98,
            "{seed}: {:?}",
            fit.params
        );
    }
}

#[test]
fn raw_visibility_with_flat_envelope() {
    let params = FringeModelParams {
        visibility: 0.943,
        detuning: TAU * 1.75,
        phase: PI,
        coherence_time: 200.0,
    };
    // grid step divides the half period, so both the peak at 0 and the
    // first dips at +/- pi/mu are sampled
    let half_period = PI / params.detuning;
    let taus: Vec<f64> = (-40..=40).map(|k| k as f64 * half_period / 10.0).collect();
    let scan = noiseless_scan(&params, &taus, 1_000_000_000_000);
    let raw = raw_visibility(&scan).unwrap();
    assert!((raw - params.visibility).abs() <= 0.005, "{raw}");
}

#[test]
fn reported_chain() {
    let f_p = polarization_fidelity_bound(0.993, 0.964);
    assert!((f_p - 0.9785).abs() < 1e-12);
    assert!((concurrence_bound(f_p) - 0.957).abs() < 1e-12);
    let rs = RestrictedState::new(0.52, 0.943, 179.6f64.to_radians()).unwrap();
    let rho = restricted_rho(&rs).unwrap();
    let f_w = fidelity_pure(&rho, &bell::psi_minus()).unwrap();
    assert!((f_w - 0.9715).abs() < 5e-4);
    assert!((concurrence(&rho).unwrap() - 0.943).abs() < 1e-3);
    assert!((visibility_fidelity_bound(0.855) - 0.855).abs() < 1e-15);
}

#[test]
fn polarization_bound_matches_sdp_oracle() {
    let c = |m: CMatrix, rhs: f64| Constraint {
        matrix: m,
        rhs,
        kind: ConstraintKind::Equal,
    };
    let problem = SdpProblem::new(
        bell::psi_plus().to_density().into_matrix(),
        vec![
            c(zz(), -0.993),
            c(xx(), 0.964),
            c(CMatrix::identity(4, 4), 1.0),
        ],
    )
    .unwrap();
    let s = solve(&problem, 1e-9).unwrap();
    assert_eq!(s.status, SolverStatus::Optimal);
    assert!((s.primal_value - 0.9785).abs() < 1e-4);
    assert!((polarization_fidelity_bound(0.993, 0.964) - s.primal_value).abs() < 1e-4);
}

#[test]
fn balance_of_synthetic_spectra() {
    let x: Vec<f64> = (0..400).map(|k| 1540.0 + 0.05 * k as f64).collect();
    let peak =
        |x0: f64, s: f64, h: f64| move |x: f64| h * (-(x - x0).powi(2) / (2.0 * s * s)).exp();
    let (p1, p2) = (peak(1546.0, 0.3, 1.0), peak(1554.0, 0.3, 1.0));
    let a: Vec<f64> = x.iter().map(|&v| 520.0 * p1(v) + 480.0 * p2(v)).collect();
    let b: Vec<f64> = x.iter().map(|&v| 480.0 * p1(v) + 520.0 * p2(v)).collect();
    let spec = SpectrumHistogram {
        mode_a: Spectrum::new(x.clone(), a).unwrap(),
        mode_b: Spectrum::new(x, b).unwrap(),
    };
    let w = default_windows(&spec).unwrap();
    let p = balance_from_spectra(&spec, w).unwrap();
    let expected = 0.52 * 0.52 / (0.52 * 0.52 + 0.48 * 0.48);
    assert!((p - expected).abs() < 1e-9, "{p}");
    let empty = BinWindow::new(1600.0, 1601.0);
    assert!(balance_from_spectra(&spec, [w[0], empty]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn restricted_fidelity_is_balance_independent(p in 0.0..=1.0f64, frac in 0.0..=1.0f64, phi in -PI..PI) {
        let v = 2.0 * (p * (1.0 - p)).sqrt() * frac;
        let rs = RestrictedState::new(p, v, phi).unwrap();
        let f = fidelity_pure(&restricted_rho(&rs).unwrap(), &bell::psi_minus()).unwrap();
        prop_assert!((f - (0.5 - 0.5 * v * phi.cos())).abs() < 1e-12);
        prop_assert!((f - rs.fidelity()).abs() < 1e-12);
    }

    #[test]
    fn visibility_bound_below_best_povm_fidelity(seed in any::<u64>()) {
        let rho = random::energy_conserving_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let v = 2.0 * rho.get(1, 2).norm() / (rho.get(1, 1).re + rho.get(2, 2).re);
        let best = (0..3600)
            .map(|k| hom_povm_prob(&rho, TAU * k as f64 / 3600.0).unwrap())
            .fold(f64::MIN, f64::max);
        prop_assert!(visibility_fidelity_bound(v) <= best + 1e-12);
    }

    #[test]
    fn polarization_bound_below_fidelity(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random::ginibre_state(4, rank, &mut ChaCha8Rng::seed_from_u64(seed));
        let v_ad = rho.expectation(&xx()).unwrap();
        let v_hv = -rho.expectation(&zz()).unwrap();
        let f = fidelity_pure(&rho, &bell::psi_plus()).unwrap();
        prop_assert!(polarization_fidelity_bound(v_hv, v_ad) <= f + 1e-12);
    }
}
