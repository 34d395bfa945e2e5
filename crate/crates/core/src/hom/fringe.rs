use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the damped-cosine coincidence model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeModelParams {
    /// Fringe visibility `V_w` in `[0, 1]`.
    pub visibility: f64,
    /// Bin detuning `mu = w2 - w1` (rad/ps).
    pub detuning: f64,
    /// Phase offset `phi_w` (rad).
    pub phase: f64,
    /// Base-to-base width of the triangular envelope (ps).
    pub coherence_time: f64,
}

impl FringeModelParams {
    /// Values reported for the measured fringe: 94.3 % visibility, 1.75 THz
    /// detuning (stored as angular frequency), 179.6 degree phase, 3.8 ps
    /// coherence time.
    pub fn reported() -> Self {
        Self {
            visibility: 0.943,
            detuning: TAU * 1.75,
            phase: 179.6_f64.to_radians(),
            coherence_time: 3.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::InvalidInput(format!(
                "visibility {} outside [0, 1]",
                self.visibility
            )));
        }
        if !(self.coherence_time > 0.0) || !self.coherence_time.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coherence time {} must be positive",
                self.coherence_time
            )));
        }
        if !(self.detuning >= 0.0) || !self.detuning.is_finite() {
            return Err(Error::InvalidInput(format!(
                "detuning {} must be non-negative",
                self.detuning
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidInput("phase must be finite".into()));
        }
        Ok(())
    }
}

/// `1 - |2 tau / tau_c|` inside the envelope, zero outside.
pub fn fringe_envelope(tau: f64, coherence_time: f64) -> f64 {
    let x = (2.0 * tau / coherence_time).abs();
    if x < 1.0 {
        1.0 - x
    } else {
        0.0
    }
}

/// `1/2 - (V/2) cos(mu tau + phi) (1 - |2 tau / tau_c|)` for
/// `|tau| < tau_c / 2`, exactly `1/2` outside.
pub fn fringe_model_prob(tau: f64, params: &FringeModelParams) -> f64 {
    let env = fringe_envelope(tau, params.coherence_time);
    if env == 0.0 {
        return 0.5;
    }
    0.5 - 0.5 * params.visibility * (params.detuning * tau + params.phase).cos() * env
}

/// Smallest positive delay at which the model has a local minimum (the first
/// bunching dip), or `None` if the envelope holds no minimum.
pub fn first_dip_delay(params: &FringeModelParams) -> Option<f64> {
    let half = 0.5 * params.coherence_time;
    let n = 20_000;
    let step = half / n as f64;
    let p = |t: f64| fringe_model_prob(t, params);
    let mut prev = p(0.0);
    let mut cur = p(step);
    for k in 2..n {
        let next = p(k as f64 * step);
        if cur < prev && cur <= next {
            let (lo, hi) = ((k - 2) as f64 * step, k as f64 * step);
            return Some(golden_min(p, lo, hi, 1e-12));
        }
        prev = cur;
        cur = next;
    }
    None
}

/// Golden-section minimizer on `[lo, hi]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while (hi - lo).abs() > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_visibility_is_flat() {
        let p = FringeModelParams {
            visibility: 0.0,
            ..FringeModelParams::reported()
        };
        for k in -50..=50 {
            assert_eq!(fringe_model_prob(k as f64 * 0.1, &p), 0.5);
        }
    }

    #[test]
    fn envelope_edge_is_half() {
        let p = FringeModelParams::reported();
        let edge = p.coherence_time / 2.0;
        assert_eq!(fringe_model_prob(edge, &p), 0.5);
        assert_eq!(fringe_model_prob(-edge, &p), 0.5);
        // approaching from inside
        assert!((fringe_model_prob(edge * (1.0 - 1e-12), &p) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn reported_peak_value() {
        let p = FringeModelParams::reported();
        let expected = 0.5 - 0.5 * 0.943 * 179.6_f64.to_radians().cos();
        assert!((fringe_model_prob(0.0, &p) - expected).abs() < 1e-15);
        assert!((fringe_model_prob(0.0, &p) - 0.9715).abs() < 5e-5);
    }

    #[test]
    fn first_dip_near_path_delay_of_eighty_microns() {
        let p = FringeModelParams::reported();
        let tau = first_dip_delay(&p).unwrap();
        // cos(mu tau + phi) = 1 near the first dip; the falling envelope pulls it inwards
        let expected = (TAU - p.phase) / p.detuning;
        assert!(
            tau < expected && expected - tau < 0.01,
            "{tau} vs {expected}"
        );
        // 0.08 mm of path is ~0.267 ps
        assert!((tau - 0.08 / 0.299_792_458).abs() < 0.03);
    }

    #[test]
    fn validation() {
        let mut p = FringeModelParams::reported();
        assert!(p.validate().is_ok());
        p.coherence_time = 0.0;
        assert!(p.validate().is_err());
        p = FringeModelParams::reported();
        p.visibility = 1.2;
        assert!(p.validate().is_err());
    }
}
