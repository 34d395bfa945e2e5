//! The pipeline stages behind the subcommands.

use std::path::Path;

use hyperent::certification::{certify_with, Certificate, ConstraintKind, SolverStatus};
use hyperent::estimation::{
    balance_from_spectra, concurrence_bound, default_windows, fit_fringe,
    polarization_fidelity_bound, raw_visibility, restricted_rho, visibility_fidelity_bound,
    FringeFit, RestrictedState, Spectrum, SpectrumHistogram,
};
use hyperent::hom::{
    bin_profile, fringe_model_prob, sample_scan_with, sinc_bandwidth, substream_rng, two_bin_jsa,
    BinShape, FringeScan, HomQuadrature, SampleOptions,
};
use hyperent::linalg::{bell, concurrence, fidelity_pure, DensityMatrix};
use hyperent::source::{
    basis_visibility, hyper_state, polarization_reduction, polarization_sweep,
    postselect_antiparallel, Basis,
};
use hyperent::Execution;
use rand::RngCore;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::config::{Format, FrequencyBound, PipelineConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_table, fmt_sig, round_sig, OutDir};

/// Substream of the config seed reserved for the delay scan.
const SCAN_STREAM: u64 = 1;
/// Substream of the config seed reserved for the spectra.
const SPECTRA_STREAM: u64 = 2;

fn named_seed(seed: u64, stream: u64) -> u64 {
    substream_rng(seed, stream).next_u64()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PolarizationSummary {
    pub v_hv: f64,
    pub v_ad: f64,
    pub postselection_probability: Option<f64>,
}

pub struct Simulation {
    pub scan: FringeScan,
    pub model: Vec<(f64, f64)>,
    pub spectra: SpectrumHistogram,
    pub sweep: Vec<(Basis, f64, f64)>,
    pub polarization: PolarizationSummary,
}

#[derive(Serialize)]
struct ModelPoint {
    tau_ps: f64,
    probability: f64,
}

#[derive(Serialize)]
struct SweepPoint {
    basis: Basis,
    theta_b_rad: f64,
    probability: f64,
}

/// Coincidence probability at each delay from the configured fringe.
fn fringe_probability(cfg: &PipelineConfig) -> CliResult<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    match (&cfg.fringe, &cfg.jsa) {
        (Some(params), _) => {
            let params = *params;
            Ok(Box::new(move |t| fringe_model_prob(t, &params)))
        }
        (None, Some(spec)) => {
            let jsa = two_bin_jsa(spec).map_err(|e| CliError::usage("config jsa", e))?;
            let q = HomQuadrature::new(&jsa);
            Ok(Box::new(move |t| q.prob(t)))
        }
        (None, None) => Err(CliError::Usage("config: no fringe description".into())),
    }
}

/// Single-photon spectra of modes `a` and `b` with Poisson counts. The pair
/// `|w1 w2>` (weight `p`) puts photon `a` in the lower bin.
fn simulate_spectra(cfg: &PipelineConfig, seed: u64) -> CliResult<SpectrumHistogram> {
    let (mu, shape, fwhm) = match (&cfg.fringe, &cfg.jsa) {
        (Some(f), _) => (f.detuning, BinShape::Sinc, sinc_bandwidth(f.coherence_time)),
        (None, Some(j)) => (j.detuning, j.shape, j.bin_bandwidth),
        (None, None) => return Err(CliError::Usage("config: no fringe description".into())),
    };
    let s = &cfg.spectra;
    let half = 0.5 * mu + 6.0 * fwhm;
    let x: Vec<f64> = (0..s.points)
        .map(|k| round_sig(-half + 2.0 * half * k as f64 / (s.points - 1) as f64))
        .collect();
    let intensity = |nu: f64| bin_profile(shape, nu, fwhm).powi(2);
    let p = s.p_omega;
    let density_a: Vec<f64> = x
        .iter()
        .map(|&v| p * intensity(v + 0.5 * mu) + (1.0 - p) * intensity(v - 0.5 * mu))
        .collect();
    let density_b: Vec<f64> = x
        .iter()
        .map(|&v| (1.0 - p) * intensity(v + 0.5 * mu) + p * intensity(v - 0.5 * mu))
        .collect();
    let budget = s.counts_per_mode as f64;
    let sample = |density: &[f64], offset: u64| -> CliResult<Vec<f64>> {
        let total: f64 = density.iter().sum();
        density
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let mean = budget * d / total;
                if mean <= 0.0 {
                    return Ok(0.0);
                }
                let poisson = Poisson::new(mean).map_err(|e| CliError::numeric("spectra", e))?;
                Ok(poisson
                    .sample(&mut substream_rng(seed, 2 * k as u64 + offset))
                    .round())
            })
            .collect()
    };
    let counts_a = sample(&density_a, 0)?;
    let counts_b = sample(&density_b, 1)?;
    let spectrum = |c| Spectrum::new(x.clone(), c).map_err(|e| CliError::numeric("spectra", e));
    Ok(SpectrumHistogram {
        mode_a: spectrum(counts_a)?,
        mode_b: spectrum(counts_b)?,
    })
}

pub fn simulate(cfg: &PipelineConfig) -> CliResult<Simulation> {
    let rho = hyper_state(&cfg.source).map_err(|e| CliError::usage("config source", e))?;
    let selected =
        postselect_antiparallel(&rho).map_err(|e| CliError::numeric("post-selection", e))?;
    let rho_p = polarization_reduction(&selected.state)
        .map_err(|e| CliError::numeric("polarization", e))?;
    let mut sweep = Vec::new();
    for basis in [Basis::HV, Basis::AD] {
        let curve =
            polarization_sweep(&rho_p, basis).map_err(|e| CliError::numeric("polarization", e))?;
        sweep.extend(curve.into_iter().map(|(t, p)| (basis, t, p)));
    }
    let polarization = if cfg.polarization.simulate {
        let v = |b| {
            basis_visibility(&rho_p, b).map_err(|e| CliError::numeric("polarization visibility", e))
        };
        PolarizationSummary {
            v_hv: v(Basis::HV)?,
            v_ad: v(Basis::AD)?,
            postselection_probability: Some(selected.success_probability),
        }
    } else {
        PolarizationSummary {
            v_hv: cfg.polarization.v_hv.unwrap_or_default(),
            v_ad: cfg.polarization.v_ad.unwrap_or_default(),
            postselection_probability: None,
        }
    };

    let prob = fringe_probability(cfg)?;
    let delays = cfg.delays();
    let options = SampleOptions {
        model: cfg.scan.count_model,
        execution: Execution::default(),
    };
    let scan = sample_scan_with(
        &prob,
        &delays,
        cfg.scan.pairs_per_point,
        named_seed(cfg.scan.seed, SCAN_STREAM),
        options,
    )
    .map_err(|e| CliError::numeric("scan sampling", e))?;
    let scan = FringeScan::new(scan.points().to_vec(), Some(cfg.scan.seed))
        .map_err(|e| CliError::numeric("scan", e))?;
    let model = Execution::default().map_slice(&delays, |&t| (t, prob(t)));
    let spectra = simulate_spectra(cfg, named_seed(cfg.scan.seed, SPECTRA_STREAM))?;
    Ok(Simulation {
        scan,
        model,
        spectra,
        sweep,
        polarization,
    })
}

pub fn write_simulation(sim: &Simulation, out: &OutDir, format: Format) -> CliResult<()> {
    let model = || {
        sim.model.iter().map(|&(t, p)| ModelPoint {
            tau_ps: t,
            probability: p,
        })
    };
    let sweep = || {
        sim.sweep.iter().map(|&(basis, t, p)| SweepPoint {
            basis,
            theta_b_rad: t,
            probability: p,
        })
    };
    match format {
        Format::Csv => {
            let scan = sim
                .scan
                .to_csv_string()
                .map_err(|e| CliError::usage("fringe.csv", e))?;
            out.write("fringe.csv", &scan)?;
            let rows = model().map(|m| vec![fmt_sig(m.tau_ps), fmt_sig(m.probability)]);
            out.write(
                "fringe_model.csv",
                &csv_table(&["tau_ps", "probability"], rows)?,
            )?;
            let rows = sim
                .spectra
                .mode_a
                .abscissa()
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    vec![
                        fmt_sig(x),
                        fmt_sig(sim.spectra.mode_a.counts()[k]),
                        fmt_sig(sim.spectra.mode_b.counts()[k]),
                    ]
                });
            out.write(
                "spectra.csv",
                &csv_table(&hyperent::estimation::SPECTRA_HEADER, rows)?,
            )?;
            let rows = sweep().map(|s| {
                let b = match s.basis {
                    Basis::HV => "HV",
                    Basis::AD => "AD",
                };
                vec![
                    b.to_string(),
                    fmt_sig(s.theta_b_rad),
                    fmt_sig(s.probability),
                ]
            });
            out.write(
                "polarization_scan.csv",
                &csv_table(&["basis", "theta_b_rad", "probability"], rows)?,
            )?;
        }
        Format::Json => {
            out.write_json("fringe.json", &sim.scan)?;
            out.write_json("fringe_model.json", &model().collect::<Vec<_>>())?;
            out.write_json("spectra.json", &sim.spectra)?;
            out.write_json("polarization_scan.json", &sweep().collect::<Vec<_>>())?;
        }
    }
    Ok(())
}

/// Where the pair balance came from.
pub enum Balance<'a> {
    Spectra(&'a SpectrumHistogram),
    Given(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoOmegaReport {
    pub p_omega: f64,
    pub visibility: f64,
    /// Fitted visibility exceeded `2 sqrt(p (1 - p))` and was reduced to it.
    pub visibility_clipped: bool,
    pub phase: f64,
    /// Real and imaginary parts, basis `w1w1, w1w2, w2w1, w2w2`.
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
    pub f_omega: f64,
    pub concurrence_wootters: f64,
    pub concurrence_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub raw_visibility: f64,
    pub fitted_visibility: f64,
    /// `F_w >= V_raw`
    pub f_omega_bound_raw: f64,
    /// `F_w >= V_fit`
    pub f_omega_bound_fitted: f64,
}

pub struct FitOutcome {
    pub fit: FringeFit,
    pub rho: RhoOmegaReport,
    pub bounds: BoundsReport,
}

fn matrix_parts(rho: &DensityMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = rho.dim();
    let part = |f: fn(hyperent::linalg::C64) -> f64| {
        (0..n)
            .map(|i| (0..n).map(|j| f(rho.get(i, j))).collect())
            .collect()
    };
    (part(|z| z.re), part(|z| z.im))
}

pub fn fit(scan: &FringeScan, balance: Balance<'_>) -> CliResult<FitOutcome> {
    let fit = fit_fringe(scan).map_err(|e| CliError::numeric("fringe fit", e))?;
    let raw = raw_visibility(scan).map_err(|e| CliError::numeric("raw visibility", e))?;
    let p_omega = match balance {
        Balance::Given(p) => p,
        Balance::Spectra(spec) => {
            let windows =
                default_windows(spec).map_err(|e| CliError::numeric("spectral windows", e))?;
            balance_from_spectra(spec, windows).map_err(|e| CliError::numeric("pair balance", e))?
        }
    };
    // a noisy balance estimate can put the fitted coherence outside the
    // positive cone; clip it onto the boundary
    let limit = 2.0 * (p_omega * (1.0 - p_omega)).sqrt();
    let visibility_clipped = fit.params.visibility > limit;
    let rs = RestrictedState::new(p_omega, fit.params.visibility.min(limit), fit.params.phase)
        .map_err(|e| CliError::numeric("restricted state", e))?;
    let rho = restricted_rho(&rs).map_err(|e| CliError::numeric("restricted state", e))?;
    let f_omega =
        fidelity_pure(&rho, &bell::psi_minus()).map_err(|e| CliError::numeric("fidelity", e))?;
    let c_w = concurrence(&rho).map_err(|e| CliError::numeric("concurrence", e))?;
    let (rho_re, rho_im) = matrix_parts(&rho);
    let bounds = BoundsReport {
        raw_visibility: raw,
        fitted_visibility: fit.params.visibility,
        f_omega_bound_raw: visibility_fidelity_bound(raw),
        f_omega_bound_fitted: visibility_fidelity_bound(fit.params.visibility),
    };
    Ok(FitOutcome {
        rho: RhoOmegaReport {
            p_omega,
            visibility: rs.visibility,
            visibility_clipped,
            phase: fit.params.phase,
            rho_re,
            rho_im,
            f_omega,
            concurrence_wootters: c_w,
            concurrence_bound: concurrence_bound(f_omega),
        },
        bounds,
        fit,
    })
}

pub fn write_fit(outcome: &FitOutcome, out: &OutDir) -> CliResult<()> {
    out.write_json("fit.json", &outcome.fit)?;
    out.write_json("rho_omega.json", &outcome.rho)?;
    out.write_json("bounds.json", &outcome.bounds)?;
    Ok(())
}

pub fn load_scan(path: &Path) -> CliResult<FringeScan> {
    let ctx = || path.display().to_string();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(ctx(), e))?;
        FringeScan::from_json(&text).map_err(|e| CliError::usage(ctx(), e))
    } else {
        FringeScan::load_csv(path).map_err(|e| CliError::usage(ctx(), e))
    }
}

pub fn load_spectra(path: &Path) -> CliResult<SpectrumHistogram> {
    let ctx = || path.display().to_string();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(ctx(), e))?;
        let raw: SpectrumHistogram =
            serde_json::from_str(&text).map_err(|e| CliError::usage(ctx(), e))?;
        let check = |s: Spectrum| Spectrum::new(s.abscissa().to_vec(), s.counts().to_vec());
        Ok(SpectrumHistogram {
            mode_a: check(raw.mode_a).map_err(|e| CliError::usage(ctx(), e))?,
            mode_b: check(raw.mode_b).map_err(|e| CliError::usage(ctx(), e))?,
        })
    } else {
        SpectrumHistogram::load_csv(path).map_err(|e| CliError::usage(ctx(), e))
    }
}

pub fn check_unit(name: &str, v: f64) -> CliResult<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(CliError::Usage(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Solves the certificate; non-optimal termination is reported after the
/// file is written.
pub fn certify(f_p: f64, f_omega: f64, tol: f64, mode: ConstraintKind) -> CliResult<Certificate> {
    check_unit("f_p", f_p)?;
    check_unit("f_omega", f_omega)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Usage(format!(
            "tolerance {tol} must lie in (0, 1)"
        )));
    }
    certify_with(f_p, f_omega, tol, mode).map_err(|e| CliError::numeric("certification", e))
}

pub fn require_optimal(cert: &Certificate) -> CliResult<()> {
    if cert.status != SolverStatus::Optimal {
        return Err(CliError::Numeric(format!(
            "solver terminated with status {:?} after {} iterations (gap {:e})",
            cert.status, cert.iterations, cert.duality_gap
        )));
    }
    Ok(())
}

#[derive(Serialize)]
pub struct Summary {
    pub seed: u64,
    pub simulated: SimulatedSummary,
    pub fitted: FittedSummary,
    pub certified: CertifiedSummary,
}

#[derive(Serialize)]
pub struct SimulatedSummary {
    pub fringe: Option<hyperent::hom::FringeModelParams>,
    pub jsa: Option<hyperent::hom::JsaSpec>,
    pub p_omega: f64,
    pub scan_points: usize,
    pub pairs_per_point: u64,
    /// `true` when the visibilities come from the simulated source state,
    /// `false` when they were given in the config.
    pub polarization_simulated: bool,
    pub v_hv: f64,
    pub v_ad: f64,
    pub postselection_probability: Option<f64>,
}

#[derive(Serialize)]
pub struct FittedSummary {
    pub visibility: f64,
    pub detuning: f64,
    pub phase: f64,
    pub coherence_time: f64,
    pub converged: bool,
    pub iterations: usize,
    pub reduced_chi_squared: f64,
    pub raw_visibility: f64,
    pub p_omega: f64,
    pub f_omega: f64,
    pub concurrence_omega_wootters: f64,
    pub concurrence_omega_bound: f64,
    pub f_p: f64,
    pub concurrence_p_bound: f64,
}

#[derive(Serialize)]
pub struct CertifiedSummary {
    pub f_p: f64,
    pub f_omega: f64,
    pub f_omega_source: FrequencyBound,
    pub fidelity_lower_bound: f64,
    pub d_ent: u32,
    pub status: SolverStatus,
    pub duality_gap: f64,
    pub tolerance: f64,
}

pub struct PipelineResult {
    pub certificate: Certificate,
    pub summary: Summary,
}

pub fn pipeline(cfg: &PipelineConfig, out: &OutDir) -> CliResult<PipelineResult> {
    let sim = simulate(cfg)?;
    write_simulation(&sim, out, cfg.output.format)?;
    let fitted = fit(&sim.scan, Balance::Spectra(&sim.spectra))?;
    write_fit(&fitted, out)?;

    let pol = sim.polarization;
    let f_p = polarization_fidelity_bound(pol.v_hv, pol.v_ad);
    let raw = cfg
        .frequency
        .raw_visibility
        .unwrap_or(fitted.bounds.raw_visibility);
    let f_omega = match cfg.frequency.bound {
        FrequencyBound::Fitted => fitted.rho.f_omega,
        FrequencyBound::RawVisibility => visibility_fidelity_bound(raw),
    };
    let tol = cfg.certification.tolerance;
    let cert = certify(f_p, f_omega, tol, cfg.certification.mode)?;
    out.write_json("certificate.json", &cert)?;

    let p = &fitted.fit.params;
    let summary = Summary {
        seed: cfg.scan.seed,
        simulated: SimulatedSummary {
            fringe: cfg.fringe,
            jsa: cfg.jsa,
            p_omega: cfg.spectra.p_omega,
            scan_points: sim.scan.len(),
            pairs_per_point: cfg.scan.pairs_per_point,
            polarization_simulated: cfg.polarization.simulate,
            v_hv: pol.v_hv,
            v_ad: pol.v_ad,
            postselection_probability: pol.postselection_probability,
        },
        fitted: FittedSummary {
            visibility: p.visibility,
            detuning: p.detuning,
            phase: p.phase,
            coherence_time: p.coherence_time,
            converged: fitted.fit.converged,
            iterations: fitted.fit.iterations,
            reduced_chi_squared: fitted.fit.reduced_chi_squared,
            raw_visibility: raw,
            p_omega: fitted.rho.p_omega,
            f_omega: fitted.rho.f_omega,
            concurrence_omega_wootters: fitted.rho.concurrence_wootters,
            concurrence_omega_bound: fitted.rho.concurrence_bound,
            f_p,
            concurrence_p_bound: concurrence_bound(f_p),
        },
        certified: CertifiedSummary {
            f_p,
            f_omega,
            f_omega_source: cfg.frequency.bound,
            fidelity_lower_bound: cert.fidelity_lower_bound,
            d_ent: cert.d_ent,
            status: cert.status,
            duality_gap: cert.duality_gap,
            tolerance: tol,
        },
    };
    out.write_json("summary.json", &summary)?;
    Ok(PipelineResult {
        certificate: cert,
        summary,
    })
}
