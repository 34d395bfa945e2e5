use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::scan::{FringeScan, ScanPoint};
use crate::error::{Error, Result};
use crate::parallel::Execution;

/// Counting statistics per delay point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountModel {
    /// Exactly `pairs_per_point` pairs, `N_c ~ Binomial(N, p)`.
    #[default]
    Binomial,
    /// `N_total ~ Poisson(pairs_per_point)` (redrawn if zero), then
    /// `N_c ~ Binomial(N_total, p)`, so `N_c` is Poisson with mean `N p`.
    Poisson,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SampleOptions {
    pub model: CountModel,
    pub execution: Execution,
}

/// Independent generator for work item `index` derived from `seed`.
pub fn substream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Binomial counts with the default execution policy.
pub fn sample_scan<F>(
    prob_fn: F,
    delays: &[f64],
    pairs_per_point: u64,
    seed: u64,
) -> Result<FringeScan>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    sample_scan_with(
        prob_fn,
        delays,
        pairs_per_point,
        seed,
        SampleOptions::default(),
    )
}

/// Draws coincidence counts at each delay. Point `k` uses substream `k` of
/// `seed`, so the result does not depend on the execution policy.
pub fn sample_scan_with<F>(
    prob_fn: F,
    delays: &[f64],
    pairs_per_point: u64,
    seed: u64,
    options: SampleOptions,
) -> Result<FringeScan>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if pairs_per_point == 0 {
        return Err(Error::InvalidInput(
            "pairs per point must be positive".into(),
        ));
    }
    let draws = options.execution.map(delays.len(), |k| {
        let tau = delays[k];
        let p = prob_fn(tau);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "probability {p} at delay {tau} outside [0, 1]"
            )));
        }
        let mut rng = substream_rng(seed, k as u64);
        let total = match options.model {
            CountModel::Binomial => pairs_per_point,
            CountModel::Poisson => {
                let dist = Poisson::new(pairs_per_point as f64)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?;
                loop {
                    let n: f64 = dist.sample(&mut rng);
                    if n >= 1.0 {
                        break n as u64;
                    }
                }
            }
        };
        let coincidences = Binomial::new(total, p)
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .sample(&mut rng);
        ScanPoint::new(tau, coincidences, total)
    });
    let points = draws.into_iter().collect::<Result<Vec<_>>>()?;
    FringeScan::new(points, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delays(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * 0.01).collect()
    }

    #[test]
    fn certain_outcomes() {
        let d = delays(20);
        let one = sample_scan(|_| 1.0, &d, 500, 1).unwrap();
        assert!(one.points().iter().all(|p| p.coincidences == p.total));
        let zero = sample_scan(|_| 0.0, &d, 500, 1).unwrap();
        assert!(zero.points().iter().all(|p| p.coincidences == 0));
    }

    #[test]
    fn mean_ratio_within_three_sigma() {
        let scan = sample_scan(|_| 0.5, &delays(200), 10_000, 42).unwrap();
        let mean: f64 = scan.points().iter().map(|p| p.ratio()).sum::<f64>() / 200.0;
        assert!((mean - 0.5).abs() < 3.0 * 0.005);
    }

    #[test]
    fn reproducible_and_policy_independent() {
        let d = delays(64);
        let f = |t: f64| 0.5 + 0.4 * (10.0 * t).cos();
        for model in [CountModel::Binomial, CountModel::Poisson] {
            let seq = SampleOptions {
                model,
                execution: Execution::Sequential,
            };
            let par = SampleOptions {
                model,
                execution: Execution::Parallel,
            };
            let a = sample_scan_with(f, &d, 1000, 9, seq).unwrap();
            let b = sample_scan_with(f, &d, 1000, 9, par).unwrap();
            let c = sample_scan_with(f, &d, 1000, 9, seq).unwrap();
            assert_eq!(a, b);
            assert_eq!(a, c);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let d = delays(32);
        let a = sample_scan(|_| 0.5, &d, 1000, 1).unwrap();
        let b = sample_scan(|_| 0.5, &d, 1000, 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_invalid_probability() {
        assert!(sample_scan(|_| 1.5, &delays(3), 10, 0).is_err());
    }
}
