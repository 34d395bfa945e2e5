use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::parallel::Execution;

/// Half-maximum argument of `sinc^2`: `sinc(x)^2 = 1/2` at `x = 1.39155737...`.
const SINC_SQ_HALF_MAX: f64 = 1.391_557_377_160_35;

/// Spectral profile of one frequency bin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinShape {
    Gaussian,
    Sinc,
}

/// Exchange symmetry of the amplitude, `f(a, b) = +/- f(b, a)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

/// How the two photons' frequencies are correlated inside each bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Correlation {
    /// Narrowband pump: the amplitude is `pump(ws + wi) * bins(ws - wi)`, so
    /// the bin profile is carried by the difference frequency.
    EnergyConserving {
        /// Intensity FWHM of the pump envelope in the sum frequency (rad/ps).
        pump_bandwidth: f64,
    },
    /// Uncorrelated bins, `g(ws - w1) g(wi - w2) +/- g(ws - w2) g(wi - w1)`.
    Product,
}

/// Uniform square grid shared by both frequency axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Samples per axis.
    pub points: usize,
    /// Axis extends this many bin bandwidths beyond each bin centre.
    pub span_bandwidths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: 512,
            span_bandwidths: 5.0,
        }
    }
}

/// Two-bin joint spectral amplitude description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaSpec {
    /// Bin separation `w2 - w1` (rad/ps).
    pub detuning: f64,
    /// Single-photon intensity FWHM of one bin (rad/ps).
    pub bin_bandwidth: f64,
    pub shape: BinShape,
    pub symmetry: Symmetry,
    pub correlation: Correlation,
    #[serde(default)]
    pub grid: GridSpec,
}

impl JsaSpec {
    /// Energy-conserving spec with the pump as wide as one bin.
    pub fn new(detuning: f64, bin_bandwidth: f64, shape: BinShape, symmetry: Symmetry) -> Self {
        Self {
            detuning,
            bin_bandwidth,
            shape,
            symmetry,
            correlation: Correlation::EnergyConserving {
                pump_bandwidth: bin_bandwidth,
            },
            grid: GridSpec::default(),
        }
    }
}

/// Triangular-envelope base width produced by energy-conserving sinc bins of
/// the given single-photon FWHM.
pub fn sinc_coherence_time(bin_bandwidth: f64) -> f64 {
    4.0 * SINC_SQ_HALF_MAX / bin_bandwidth
}

/// Inverse of [`sinc_coherence_time`].
pub fn sinc_bandwidth(coherence_time: f64) -> f64 {
    4.0 * SINC_SQ_HALF_MAX / coherence_time
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Amplitude profile whose intensity has FWHM `fwhm`, peak 1 at `nu = 0`.
pub fn bin_profile(shape: BinShape, nu: f64, fwhm: f64) -> f64 {
    match shape {
        BinShape::Gaussian => (-2.0 * std::f64::consts::LN_2 * nu * nu / (fwhm * fwhm)).exp(),
        BinShape::Sinc => sinc(nu * 2.0 * SINC_SQ_HALF_MAX / fwhm),
    }
}

/// Complex amplitude `f(ws, wi)` sampled at cell midpoints of a square grid.
///
/// Frequencies are measured from the degenerate frequency (half the pump), so
/// the bins sit at `-/+ detuning / 2`. Row index is the signal frequency, column
/// index the idler frequency; both use the same axis, which is symmetric about
/// zero so exchanging photons maps grid points onto grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectralAmplitude {
    n: usize,
    start: f64,
    step: f64,
    values: Vec<C64>,
}

impl JointSpectralAmplitude {
    /// Wraps samples on `n` midpoints `start + (k + 1/2) step`, normalizing to
    /// `sum |f|^2 step^2 = 1`.
    pub fn from_samples(n: usize, start: f64, step: f64, values: Vec<C64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: values.len(),
            });
        }
        if !(step > 0.0) {
            return Err(Error::InvalidInput("grid step must be positive".into()));
        }
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>() * step * step;
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateInput(
                "amplitude vanishes on the grid".into(),
            ));
        }
        let scale = 1.0 / norm.sqrt();
        Ok(Self {
            n,
            start,
            step,
            values: values.into_iter().map(|v| v * scale).collect(),
        })
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.start + (k as f64 + 0.5) * self.step
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }

    pub fn at(&self, signal: usize, idler: usize) -> C64 {
        self.values[signal * self.n + idler]
    }

    /// `sum |f|^2 dw^2`
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.step * self.step
    }

    /// Single-photon spectrum of the signal photon, `sum_i |f(ws, wi)|^2 dw`.
    pub fn signal_marginal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|s| (0..self.n).map(|i| self.at(s, i).norm_sqr()).sum::<f64>() * self.step)
            .collect()
    }
}

/// Builds the two-bin amplitude.
pub fn two_bin_jsa(spec: &JsaSpec) -> Result<JointSpectralAmplitude> {
    if !(spec.bin_bandwidth > 0.0) {
        return Err(Error::InvalidInput("bin bandwidth must be positive".into()));
    }
    if !(spec.detuning > spec.bin_bandwidth) {
        return Err(Error::InvalidInput(format!(
            "bins are not separated: detuning {} <= bandwidth {}",
            spec.detuning, spec.bin_bandwidth
        )));
    }
    if spec.grid.points < 2 || !(spec.grid.span_bandwidths > 0.0) {
        return Err(Error::InvalidInput(
            "grid needs >= 2 points and a positive span".into(),
        ));
    }
    let n = spec.grid.points;
    let (w1, w2) = (-0.5 * spec.detuning, 0.5 * spec.detuning);
    let start = w1 - spec.grid.span_bandwidths * spec.bin_bandwidth;
    let stop = w2 + spec.grid.span_bandwidths * spec.bin_bandwidth;
    let step = (stop - start) / n as f64;
    let min_samples = 8.0;
    if spec.bin_bandwidth / step < min_samples {
        return Err(Error::Resolution(format!(
            "{:.2} samples per bin FWHM, need at least {min_samples}",
            spec.bin_bandwidth / step
        )));
    }
    if let Correlation::EnergyConserving { pump_bandwidth } = spec.correlation {
        if !(pump_bandwidth > 0.0) {
            return Err(Error::InvalidInput(
                "pump bandwidth must be positive".into(),
            ));
        }
        if pump_bandwidth / step < min_samples {
            return Err(Error::Resolution(format!(
                "{:.2} samples per pump FWHM, need at least {min_samples}",
                pump_bandwidth / step
            )));
        }
    }
    let sign = match spec.symmetry {
        Symmetry::Symmetric => 1.0,
        Symmetry::Antisymmetric => -1.0,
    };
    let bw = spec.bin_bandwidth;
    let g = |nu: f64| bin_profile(spec.shape, nu, bw);
    let freq = |k: usize| start + (k as f64 + 0.5) * step;
    let mut values = Vec::with_capacity(n * n);
    for s in 0..n {
        let ws = freq(s);
        for i in 0..n {
            let wi = freq(i);
            let amp = match spec.correlation {
                Correlation::Product => g(ws - w1) * g(wi - w2) + sign * g(ws - w2) * g(wi - w1),
                Correlation::EnergyConserving { pump_bandwidth } => {
                    let pump = bin_profile(BinShape::Gaussian, ws + wi - (w1 + w2), pump_bandwidth);
                    let diff = ws - wi;
                    pump * (g(0.5 * (diff - (w1 - w2))) + sign * g(0.5 * (diff - (w2 - w1))))
                }
            };
            values.push(c(amp, 0.0));
        }
    }
    JointSpectralAmplitude::from_samples(n, start, step, values)
}

/// Coincidence probability after the beam splitter at delay `tau`, by
/// midpoint quadrature over the full grid:
///
/// `P = 1/4 sum [ |f(a,b)|^2 + |f(b,a)|^2 - 2 Re(f(a,b) f*(b,a) e^{-i(a-b) tau}) ]`
///
/// scaled so that the long-delay plateau is exactly 1/2.
pub fn coincidence_prob_numeric(jsa: &JointSpectralAmplitude, tau: f64) -> f64 {
    let n = jsa.n;
    let phase: Vec<C64> = (0..n)
        .map(|k| {
            let x = -jsa.frequency(k) * tau;
            c(x.cos(), x.sin())
        })
        .collect();
    let mut direct = 0.0;
    let mut cross = 0.0;
    for a in 0..n {
        for b in 0..n {
            let fab = jsa.at(a, b);
            let fba = jsa.at(b, a);
            direct += fab.norm_sqr() + fba.norm_sqr();
            // e^{-i(a - b) tau} = e^{-i a tau} e^{+i b tau}
            let rot = phase[a] * phase[b].conj();
            cross += (fab * fba.conj() * rot).re;
        }
    }
    ((direct - 2.0 * cross) / (2.0 * direct)).clamp(0.0, 1.0)
}

/// Precomputed quadrature for sweeping many delays.
///
/// The phase factor depends on the grid only through the index difference
/// `a - b`, so the cross term collapses to `2n - 1` lag sums evaluated once.
#[derive(Clone, Debug)]
pub struct HomQuadrature {
    step: f64,
    lag_sums: Vec<C64>,
    direct: f64,
    n: usize,
}

impl HomQuadrature {
    pub fn new(jsa: &JointSpectralAmplitude) -> Self {
        let n = jsa.n;
        let mut lag_sums = vec![c(0.0, 0.0); 2 * n - 1];
        let mut direct = 0.0;
        for a in 0..n {
            for b in 0..n {
                let fab = jsa.at(a, b);
                let fba = jsa.at(b, a);
                direct += fab.norm_sqr() + fba.norm_sqr();
                lag_sums[a + n - 1 - b] += fab * fba.conj();
            }
        }
        Self {
            step: jsa.step,
            lag_sums,
            direct,
            n,
        }
    }

    pub fn prob(&self, tau: f64) -> f64 {
        let mut cross = 0.0;
        for (k, s) in self.lag_sums.iter().enumerate() {
            let lag = k as f64 - (self.n as f64 - 1.0);
            let x = -lag * self.step * tau;
            cross += (s * c(x.cos(), x.sin())).re;
        }
        ((self.direct - 2.0 * cross) / (2.0 * self.direct)).clamp(0.0, 1.0)
    }
}

/// [`coincidence_prob_numeric`] over many delays, one full quadrature per
/// delay, scheduled by `exec`.
pub fn coincidence_curve(
    jsa: &JointSpectralAmplitude,
    delays: &[f64],
    exec: Execution,
) -> Vec<f64> {
    exec.map_slice(delays, |&tau| coincidence_prob_numeric(jsa, tau))
}
