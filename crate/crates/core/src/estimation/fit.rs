use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hom::{fringe_envelope, fringe_model_prob, golden_min, FringeModelParams, FringeScan};

/// Parameter order of the fit vector and covariance matrix.
pub const PARAM_NAMES: [&str; 5] = [
    "visibility",
    "detuning",
    "phase",
    "coherence_time",
    "amplitude_scale",
];

const NPAR: usize = 5;

/// One-sigma errors from the covariance diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub visibility: f64,
    pub detuning: f64,
    pub phase: f64,
    pub coherence_time: f64,
    pub amplitude_scale: f64,
}

/// Weighted least-squares estimate of the fringe model.
///
/// Expected counts at point `k` are `A (N_k / mean N) P(tau_k)`, so
/// `amplitude_scale` is the number of coincidences a point with the mean
/// pair count would record at `P = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub params: FringeModelParams,
    pub amplitude_scale: f64,
    /// Root mean square of the weighted residuals.
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `chi^2 / (n - 5)`
    pub reduced_chi_squared: f64,
    /// `(J^T W J)^{-1}` in [`PARAM_NAMES`] order.
    pub covariance: Vec<Vec<f64>>,
    pub standard_errors: ParamErrors,
    pub points: usize,
}

/// Levenberg-Marquardt settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Converged once every `|step_i| <= tol (|theta_i| + tol)`.
    pub step_tolerance: f64,
    pub min_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-8,
            min_points: 20,
        }
    }
}

/// `(N_max - N_min) / (N_max + N_min)` over the recorded coincidences.
pub fn raw_visibility(scan: &FringeScan) -> Result<f64> {
    let (lo, hi) = scan.points().iter().fold((u64::MAX, 0u64), |(lo, hi), p| {
        (lo.min(p.coincidences), hi.max(p.coincidences))
    });
    if scan.is_empty() || hi == 0 {
        return Err(Error::DegenerateInput("scan holds no coincidences".into()));
    }
    Ok((hi - lo) as f64 / (hi + lo) as f64)
}

pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit> {
    fit_fringe_with(scan, &FitOptions::default())
}

struct Data {
    tau: Vec<f64>,
    y: Vec<f64>,
    scale: Vec<f64>,
    sigma: Vec<f64>,
}

impl Data {
    fn model(&self, theta: &[f64; NPAR], k: usize) -> f64 {
        theta[4] * self.scale[k] * fringe_model_prob(self.tau[k], &to_params(theta))
    }

    fn residuals(&self, theta: &[f64; NPAR]) -> DVector<f64> {
        DVector::from_fn(self.tau.len(), |k, _| {
            (self.model(theta, k) - self.y[k]) / self.sigma[k]
        })
    }

    fn jacobian(&self, theta: &[f64; NPAR]) -> DMatrix<f64> {
        let [v, mu, phi, tc, a] = *theta;
        let mut j = DMatrix::zeros(self.tau.len(), NPAR);
        for k in 0..self.tau.len() {
            let t = self.tau[k];
            let w = a * self.scale[k] / self.sigma[k];
            let env = fringe_envelope(t, tc);
            let (s, c) = (mu * t + phi).sin_cos();
            let p = if env > 0.0 {
                0.5 - 0.5 * v * c * env
            } else {
                0.5
            };
            j[(k, 0)] = w * (-0.5 * c * env);
            j[(k, 1)] = w * (0.5 * v * s * t * env);
            j[(k, 2)] = w * (0.5 * v * s * env);
            j[(k, 3)] = if env > 0.0 {
                w * (-0.5 * v * c * 2.0 * t.abs() / (tc * tc))
            } else {
                0.0
            };
            j[(k, 4)] = self.scale[k] * p / self.sigma[k];
        }
        j
    }
}

fn to_params(theta: &[f64; NPAR]) -> FringeModelParams {
    FringeModelParams {
        visibility: theta[0],
        detuning: theta[1],
        phase: theta[2],
        coherence_time: theta[3],
    }
}

fn project(theta: &mut [f64; NPAR], tc_floor: f64) {
    theta[0] = theta[0].clamp(0.0, 1.0);
    theta[1] = theta[1].max(0.0);
    theta[3] = theta[3].max(tc_floor);
    theta[4] = theta[4].max(f64::MIN_POSITIVE);
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn periodogram(tau: &[f64], d: &[f64], omega: f64) -> num_complex::Complex64 {
    tau.iter()
        .zip(d)
        .map(|(&t, &x)| num_complex::Complex64::from_polar(x, -omega * t))
        .sum()
}

/// Starting point: baseline from the median, coherence time from the extent
/// of the significant deviations, detuning from the periodogram peak, phase
/// from the periodogram phase at that peak, visibility from the raw contrast.
fn initial_guess(data: &Data) -> [f64; NPAR] {
    let u: Vec<f64> = data.y.iter().zip(&data.scale).map(|(y, s)| y / s).collect();
    let base = median(u.clone()).max(f64::MIN_POSITIVE);
    let d: Vec<f64> = u.iter().map(|x| x - base).collect();
    let dmax = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let reach = data
        .tau
        .iter()
        .zip(&d)
        .filter(|(_, x)| x.abs() > 0.2 * dmax)
        .fold(0.0f64, |m, (t, _)| m.max(t.abs()));
    let first = data.tau[0];
    let last = data.tau[data.tau.len() - 1];
    let span = last - first;
    let min_gap = data
        .tau
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let lower = 4.0 * min_gap;
    let upper = (2.0 * first.abs().max(last.abs())).max(lower);
    let tc = (reach / 0.4).clamp(lower, upper);

    let lo = TAU / span;
    let hi = PI / min_gap;
    let step = lo / 8.0;
    let power = |w: f64| periodogram(&data.tau, &d, w).norm_sqr();
    let mut best = lo;
    let mut best_power = f64::NEG_INFINITY;
    let mut w = lo;
    while w <= hi {
        let p = power(w);
        if p > best_power {
            best_power = p;
            best = w;
        }
        w += step;
    }
    let mu = golden_min(
        |w| -power(w),
        (best - step).max(0.0),
        best + step,
        1e-10 * hi,
    );
    let phi = (-periodogram(&data.tau, &d, mu)).arg().rem_euclid(TAU);

    let (umin, umax) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let v = ((umax - umin) / (umax + umin)).clamp(0.05, 1.0);
    [v, mu, phi, tc, 2.0 * base]
}

/// Levenberg-Marquardt on the weighted residuals `(model - N_c) / max(sqrt(N_c), 1)`.
pub fn fit_fringe_with(scan: &FringeScan, options: &FitOptions) -> Result<FringeFit> {
    let n = scan.len();
    if n < options.min_points.max(NPAR + 1) {
        return Err(Error::InvalidInput(format!(
            "fit needs at least {} points, scan has {n}",
            options.min_points.max(NPAR + 1)
        )));
    }
    let mean_total = scan.points().iter().map(|p| p.total as f64).sum::<f64>() / n as f64;
    let data = Data {
        tau: scan.delays(),
        y: scan
            .points()
            .iter()
            .map(|p| p.coincidences as f64)
            .collect(),
        scale: scan
            .points()
            .iter()
            .map(|p| p.total as f64 / mean_total)
            .collect(),
        sigma: scan
            .points()
            .iter()
            .map(|p| (p.coincidences as f64).sqrt().max(1.0))
            .collect(),
    };
    let ratios: Vec<f64> = scan.points().iter().map(|p| p.ratio()).collect();
    if ratios.iter().all(|&r| r == ratios[0]) {
        return Err(Error::FlatData);
    }

    let min_gap = data
        .tau
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let tc_floor = 2.0 * min_gap;
    let mut theta = initial_guess(&data);
    project(&mut theta, tc_floor);
    let mut r = data.residuals(&theta);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let tol = options.step_tolerance;

    while iterations < options.max_iterations {
        iterations += 1;
        let j = data.jacobian(&theta);
        let (js, colnorm) = normalize_columns(&j);
        let h = js.transpose() * &js;
        let g = js.transpose() * &r;
        let Some(scaled_step) = bounded_step(&h, &g, lambda, &theta, tc_floor) else {
            lambda *= 10.0;
            continue;
        };
        let mut trial = theta;
        for i in 0..NPAR {
            trial[i] += scaled_step[i] / colnorm[i];
        }
        project(&mut trial, tc_floor);
        let small = (0..NPAR).all(|i| (trial[i] - theta[i]).abs() <= tol * (theta[i].abs() + tol));
        let r_trial = data.residuals(&trial);
        let c_trial = r_trial.norm_squared();
        if c_trial <= cost {
            theta = trial;
            r = r_trial;
            cost = c_trial;
            lambda = (lambda / 3.0).max(1e-12);
        } else {
            lambda = (lambda * 4.0).min(1e16);
        }
        if small {
            converged = true;
            break;
        }
    }

    theta[2] = theta[2].rem_euclid(TAU);
    let fit = finish(&data, &theta, cost, converged, iterations);
    if !converged {
        return Err(Error::FitFailure {
            iterations,
            best: Box::new(fit),
        });
    }
    Ok(fit)
}

fn normalize_columns(j: &DMatrix<f64>) -> (DMatrix<f64>, [f64; NPAR]) {
    let mut norms = [1.0; NPAR];
    let mut js = j.clone();
    for (i, n) in norms.iter_mut().enumerate() {
        let nrm = j.column(i).norm();
        if nrm > 0.0 {
            *n = nrm;
            js.column_mut(i).unscale_mut(nrm);
        }
    }
    (js, norms)
}

/// Damped step with parameters held fixed when they sit on a bound and the
/// free step would push them outside.
fn bounded_step(
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    lambda: f64,
    theta: &[f64; NPAR],
    tc_floor: f64,
) -> Option<DVector<f64>> {
    let mut fixed = [false; NPAR];
    loop {
        let mut a = h.clone();
        let mut b = -g;
        for i in 0..NPAR {
            a[(i, i)] += lambda;
            if fixed[i] {
                for k in 0..NPAR {
                    a[(i, k)] = 0.0;
                    a[(k, i)] = 0.0;
                }
                a[(i, i)] = 1.0;
                b[i] = 0.0;
            }
        }
        let step = solve_spd(a, b)?;
        let outward = |i: usize| match i {
            0 => (theta[0] >= 1.0 && step[0] > 0.0) || (theta[0] <= 0.0 && step[0] < 0.0),
            1 => theta[1] <= 0.0 && step[1] < 0.0,
            3 => theta[3] <= tc_floor && step[3] < 0.0,
            _ => false,
        };
        let newly: Vec<usize> = (0..NPAR).filter(|&i| !fixed[i] && outward(i)).collect();
        if newly.is_empty() {
            return Some(step);
        }
        for i in newly {
            fixed[i] = true;
        }
    }
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Option<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Some(ch.solve(&b)),
        None => a.svd(true, true).solve(&b, 1e-14).ok(),
    }
}

fn finish(
    data: &Data,
    theta: &[f64; NPAR],
    cost: f64,
    converged: bool,
    iterations: usize,
) -> FringeFit {
    let n = data.tau.len();
    let j = data.jacobian(theta);
    let (js, colnorm) = normalize_columns(&j);
    let h = js.transpose() * js;
    let inv = h.clone().try_inverse().unwrap_or_else(|| {
        h.pseudo_inverse(1e-14)
            .unwrap_or(DMatrix::zeros(NPAR, NPAR))
    });
    let covariance: Vec<Vec<f64>> = (0..NPAR)
        .map(|r| {
            (0..NPAR)
                .map(|c| inv[(r, c)] / (colnorm[r] * colnorm[c]))
                .collect()
        })
        .collect();
    let se: Vec<f64> = (0..NPAR)
        .map(|i| covariance[i][i].max(0.0).sqrt())
        .collect();
    FringeFit {
        params: to_params(theta),
        amplitude_scale: theta[4],
        residual_rms: (cost / n as f64).sqrt(),
        converged,
        iterations,
        reduced_chi_squared: cost / (n - NPAR) as f64,
        covariance,
        standard_errors: ParamErrors {
            visibility: se[0],
            detuning: se[1],
            phase: se[2],
            coherence_time: se[3],
            amplitude_scale: se[4],
        },
        points: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom::{sample_scan, ScanPoint};

    fn delays(n: usize, half: f64) -> Vec<f64> {
        (0..n)
            .map(|k| -half + 2.0 * half * k as f64 / (n - 1) as f64)
            .collect()
    }

    fn noiseless(params: &FringeModelParams, pairs: u64) -> FringeScan {
        let pts = delays(400, 3.0)
            .into_iter()
            .map(|t| {
                let n = (pairs as f64 * fringe_model_prob(t, params)).round() as u64;
                ScanPoint::new(t, n, pairs).unwrap()
            })
            .collect();
        FringeScan::new(pts, None).unwrap()
    }

    #[test]
    fn raw_visibility_cases() {
        let s = FringeScan::new(
            vec![
                ScanPoint::new(0.0, 100, 200).unwrap(),
                ScanPoint::new(1.0, 0, 200).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(raw_visibility(&s).unwrap(), 1.0);
        let flat = FringeScan::new(
            vec![
                ScanPoint::new(0.0, 7, 20).unwrap(),
                ScanPoint::new(1.0, 7, 20).unwrap(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(raw_visibility(&flat).unwrap(), 0.0);
        let zero = FringeScan::new(vec![ScanPoint::new(0.0, 0, 20).unwrap()], None).unwrap();
        assert!(raw_visibility(&zero).is_err());
    }

    #[test]
    fn noiseless_round_trip() {
        let truth = FringeModelParams::reported();
        let fit = fit_fringe(&noiseless(&truth, 1_000_000_000_000)).unwrap();
        let rel = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(fit.converged);
        assert!(
            rel(fit.params.visibility, truth.visibility) < 1e-6,
            "{:?}",
            fit.params
        );
        assert!(rel(fit.params.detuning, truth.detuning) < 1e-6);
        assert!(rel(fit.params.phase, truth.phase) < 1e-6);
        assert!(rel(fit.params.coherence_time, truth.coherence_time) < 1e-6);
    }

    #[test]
    fn noisy_visibility() {
        let truth = FringeModelParams::reported();
        let scan = sample_scan(
            |t| fringe_model_prob(t, &truth),
            &delays(400, 3.0),
            10_000,
            42,
        )
        .unwrap();
        let fit = fit_fringe(&scan).unwrap();
        assert!(
            (fit.params.visibility - 0.943).abs() < 0.01,
            "{:?}",
            fit.params
        );
        assert!(fit.standard_errors.visibility > 0.0);
        // binomial variance N p (1 - p) against sqrt(N_c) weights: chi2/dof ~ 1 - p ~ 1/2
        assert!(fit.reduced_chi_squared > 0.35 && fit.reduced_chi_squared < 0.65);
    }

    #[test]
    fn flat_scan() {
        let flat = FringeModelParams {
            visibility: 0.0,
            ..FringeModelParams::reported()
        };
        assert!(matches!(
            fit_fringe(&noiseless(&flat, 10_000)),
            Err(Error::FlatData)
        ));
    }

    #[test]
    fn too_few_points() {
        let pts = (0..10)
            .map(|k| ScanPoint::new(k as f64, k, 10).unwrap())
            .collect();
        let scan = FringeScan::new(pts, None).unwrap();
        assert!(matches!(fit_fringe(&scan), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn iteration_cap_reports_best() {
        let truth = FringeModelParams::reported();
        let opts = FitOptions {
            max_iterations: 1,
            ..FitOptions::default()
        };
        match fit_fringe_with(&noiseless(&truth, 1_000_000), &opts) {
            Err(Error::FitFailure { iterations, best }) => {
                assert_eq!(iterations, 1);
                assert!(!best.converged);
            }
            other => panic!("{other:?}"),
        }
    }
}
