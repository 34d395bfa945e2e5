//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Exits 0 after printing the report; set `ACCEPTANCE_STRICT=1` to exit
//! non-zero when any criterion fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use hyperent::certification::{certify, to_phi_plus_frame, SolverStatus};
use hyperent::estimation::{
    concurrence_bound, fit_fringe, polarization_fidelity_bound, restricted_rho, RestrictedState,
};
use hyperent::hom::{
    fringe_model_prob, povm_extrema, sample_scan_with, sinc_bandwidth, substream_rng, two_bin_jsa,
    BinShape, CountModel, FringeModelParams, FringeScan, HomQuadrature, JsaSpec, SampleOptions,
    ScanPoint, Symmetry,
};
use hyperent::linalg::labels::{FREQ_A, FREQ_B, POL_A, POL_B};
use hyperent::linalg::{
    bell, concurrence, fidelity_pure, maximally_entangled, DensityMatrix, SubsystemLayout, PSD_TOL,
};
use hyperent::random;
use hyperent::source::{frequency_reduction, ideal_hyper_state, polarization_reduction};
use hyperent::Execution;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: u32, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail
                .push_str(&format!("; runtime limit {limit:?} exceeded"));
        }
    }
    println!(
        "criterion {id}: {} {title}: {} [{:.3} s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64()
    );
    o.pass
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

fn certification_golden() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (f_p, f_w, expected) in [(0.979, 0.971, 0.950), (0.979, 0.855, 0.834)] {
        let t = Instant::now();
        let cert = match certify(f_p, f_w) {
            Ok(c) => c,
            Err(e) => return outcome(false, format!("certify({f_p}, {f_w}) failed: {e}")),
        };
        let fast = t.elapsed() < Duration::from_secs(1);
        pass &= cert.status == SolverStatus::Optimal
            && (cert.fidelity_lower_bound - expected).abs() <= 1e-3
            && cert.d_ent == 4
            && fast;
        detail.push(format!(
            "({f_p}, {f_w}) -> {:.6} d_ent {} in {:.1} ms",
            cert.fidelity_lower_bound,
            cert.d_ent,
            t.elapsed().as_secs_f64() * 1e3
        ));
    }
    outcome(pass, detail.join(", "))
}

fn subspace_chain() -> Outcome {
    let f_p = polarization_fidelity_bound(0.993, 0.964);
    let c_p = concurrence_bound(f_p);
    let rs = match RestrictedState::new(0.52, 0.943, 179.6f64.to_radians()) {
        Ok(rs) => rs,
        Err(e) => return outcome(false, e.to_string()),
    };
    let rho = restricted_rho(&rs).expect("valid restricted state");
    let f_w = fidelity_pure(&rho, &bell::psi_minus()).expect("two-qubit state");
    let c_w = concurrence(&rho).expect("two-qubit state");
    let pass = (f_p - 0.9785).abs() <= 1e-6
        && (c_p - 0.957).abs() <= 1e-6
        && (f_w - 0.9715).abs() <= 5e-4
        && (c_w - 0.943).abs() <= 1e-3;
    outcome(
        pass,
        format!("F_p {f_p:.6}, C_p {c_p:.6}, F_w {f_w:.6}, C_w {c_w:.6}"),
    )
}

fn fringe_round_trip() -> Outcome {
    let truth = FringeModelParams::reported();
    let delays = linspace(-3.0, 3.0, 400);
    let pairs = 1_000_000_000_000u64;
    // expected counts rounded at 1e12 pairs
    let points = delays
        .iter()
        .map(|&t| {
            let n = (pairs as f64 * fringe_model_prob(t, &truth)).round() as u64;
            ScanPoint::new(t, n, pairs).expect("valid point")
        })
        .collect();
    let scan = FringeScan::new(points, None).expect("valid scan");
    let fit = match fit_fringe(&scan) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("noiseless fit failed: {e}")),
    };
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let worst = [
        rel(fit.params.visibility, truth.visibility),
        rel(fit.params.detuning, truth.detuning),
        rel(fit.params.phase, truth.phase),
        rel(fit.params.coherence_time, truth.coherence_time),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let noisy = sample_scan_with(
        |t| fringe_model_prob(t, &truth),
        &delays,
        10_000,
        42,
        SampleOptions {
            model: CountModel::Binomial,
            execution: Execution::default(),
        },
    )
    .expect("probabilities in range");
    let v_hat = match fit_fringe(&noisy) {
        Ok(f) => f.params.visibility,
        Err(e) => return outcome(false, format!("noisy fit failed: {e}")),
    };
    let pass = worst <= 1e-6 && (v_hat - truth.visibility).abs() <= 0.01;
    outcome(
        pass,
        format!("noiseless max rel err {worst:.2e}, noisy V {v_hat:.4} (seed 42)"),
    )
}

fn jsa_oracle() -> Outcome {
    let b = sinc_bandwidth(3.8);
    let mu = TAU * 1.75;
    let spec = |symmetry| JsaSpec::new(mu, b, BinShape::Sinc, symmetry);
    let (anti, sym) = match (
        two_bin_jsa(&spec(Symmetry::Antisymmetric)),
        two_bin_jsa(&spec(Symmetry::Symmetric)),
    ) {
        (Ok(a), Ok(s)) => (HomQuadrature::new(&a), HomQuadrature::new(&s)),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
    };
    let model = FringeModelParams {
        visibility: 1.0,
        detuning: mu,
        phase: PI,
        coherence_time: 3.8,
    };
    let delays = linspace(-3.0, 3.0, 601);
    let worst = Execution::default()
        .map_slice(&delays, |&t| {
            (anti.prob(t) - fringe_model_prob(t, &model)).abs()
        })
        .into_iter()
        .fold(0.0, f64::max);
    let dip = sym.prob(0.0);
    let peak = anti.prob(0.0);
    let pass = worst <= 0.02 && dip <= 0.01 && peak >= 0.99;
    outcome(
        pass,
        format!("max |P_num - P_model| {worst:.4} (limit 0.02), dip {dip:.2e}, peak {peak:.6}"),
    )
}

fn appendix_d_suite() -> Outcome {
    let results = Execution::default().map(500, |k| {
        let rho = random::energy_conserving_state(&mut substream_rng(5, k as u64));
        let v = 2.0 * rho.get(1, 2).norm() / (rho.get(1, 1).re + rho.get(2, 2).re);
        let e = povm_extrema(&rho, 720).expect("two-qubit state");
        (e.f_max - v, (e.visibility() - v).abs())
    });
    let min_margin = results.iter().map(|r| r.0).fold(f64::MAX, f64::min);
    let worst_identity = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let pass = min_margin >= -1e-12 && worst_identity <= 1e-9;
    outcome(
        pass,
        format!(
            "500 states, min F_max - V {min_margin:.3e}, max identity error {worst_identity:.2e}"
        ),
    )
}

fn sdp_soundness() -> Outcome {
    let target = ideal_hyper_state(PI, 0.0);
    let target_rho = target.to_density();
    let phi4 = maximally_entangled(4);
    let excess = Execution::default().map(200, |k| {
        let mut rng = substream_rng(6, k as u64);
        let w = rng.random_range(0.7..=1.0);
        let rho = target_rho
            .mix(&random::density_matrix(16, &mut rng), w)
            .expect("valid mixture");
        let f_p = fidelity_pure(&polarization_reduction(&rho).unwrap(), &bell::psi_plus()).unwrap();
        let f_w = fidelity_pure(&frequency_reduction(&rho).unwrap(), &bell::psi_minus()).unwrap();
        let global = fidelity_pure(&to_phi_plus_frame(&rho).unwrap(), &phi4).unwrap();
        match certify(f_p, f_w) {
            Ok(c) => c.fidelity_lower_bound - global,
            Err(_) => f64::INFINITY,
        }
    });
    let worst_excess = excess.iter().copied().fold(f64::MIN, f64::max);

    let grid = linspace(0.8, 1.0, 20);
    let cells: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .collect();
    let deviations = Execution::default().map_slice(&cells, |&(a, b)| match certify(a, b) {
        Ok(c) if c.status == SolverStatus::Optimal => {
            (c.fidelity_lower_bound - (a + b - 1.0)).abs()
        }
        _ => f64::INFINITY,
    });
    let worst_grid = deviations.into_iter().fold(0.0, f64::max);
    let pass = worst_excess <= 1e-6 && worst_grid <= 1e-4;
    outcome(
        pass,
        format!("200 states, max bound - fidelity {worst_excess:.3e}; 20x20 grid max |bound - (f_p + f_w - 1)| {worst_grid:.2e}"),
    )
}

fn linalg_suite() -> Outcome {
    let layout = SubsystemLayout::party_major();
    let keeps: [&[&str]; 3] = [&[POL_A, POL_B], &[FREQ_A, FREQ_B], &[POL_A, FREQ_A]];
    let bells = [
        bell::phi_plus(),
        bell::phi_minus(),
        bell::psi_plus(),
        bell::psi_minus(),
    ];
    let failures = Execution::default().map(1000, |k| {
        let mut rng = substream_rng(7, k as u64);
        let mut bad = 0usize;
        let rank = rng.random_range(1..=16);
        let rho = random::ginibre_state(16, rank, &mut rng);
        for keep in keeps {
            let red = layout.partial_trace(&rho, keep).unwrap();
            if (red.trace() - 1.0).abs() > 1e-10 || red.min_eigenvalue() < -PSD_TOL {
                bad += 1;
            }
        }
        let a = random::density_matrix(4, &mut rng);
        let b = random::density_matrix(4, &mut rng);
        let ab = a.tensor(&b).unwrap();
        let two = SubsystemLayout::new(vec![4, 4], vec!["a", "b"]).unwrap();
        if two
            .partial_trace(&ab, &["a"])
            .unwrap()
            .max_abs_diff(a.matrix())
            > 1e-12
            || two
                .partial_trace(&ab, &["b"])
                .unwrap()
                .max_abs_diff(b.matrix())
                > 1e-12
        {
            bad += 1;
        }
        let qa = random::pure_state(2, &mut rng);
        let qb = random::pure_state(2, &mut rng);
        if concurrence(&qa.tensor(&qb).unwrap().to_density()).unwrap() > 1e-6 {
            bad += 1;
        }
        let q = random::ginibre_state(4, rng.random_range(1..=4), &mut rng);
        let c = concurrence(&q).unwrap();
        for bs in &bells {
            if c < 2.0 * fidelity_pure(&q, bs).unwrap() - 1.0 - 1e-9 {
                bad += 1;
            }
        }
        bad
    });
    let bell_ok = bells
        .iter()
        .all(|b| (concurrence(&b.to_density()).unwrap() - 1.0).abs() <= 1e-10);
    let mixed_ok = (fidelity_pure(
        &DensityMatrix::maximally_mixed(16).unwrap(),
        &maximally_entangled(4),
    )
    .unwrap()
        - 1.0 / 16.0)
        .abs()
        < 1e-15;
    let total: usize = failures.iter().sum();
    outcome(
        total == 0 && bell_ok && mixed_ok,
        format!("1000 instances, {total} violations, Bell concurrence ok {bell_ok}"),
    )
}

fn main() {
    println!("acceptance report");
    let results = [
        run(1, "certification golden values", None, certification_golden),
        run(2, "subspace fidelity chain", None, subspace_chain),
        run(
            3,
            "fringe fit round trip",
            Some(Duration::from_secs(5)),
            fringe_round_trip,
        ),
        run(
            4,
            "sinc-bin JSA vs triangular model",
            Some(Duration::from_secs(60)),
            jsa_oracle,
        ),
        run(5, "HOM POVM visibility identity", None, appendix_d_suite),
        run(6, "SDP soundness and analytic form", None, sdp_soundness),
        run(7, "linear-algebra invariants", None, linalg_suite),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed != results.len() {
        std::process::exit(1);
    }
}
