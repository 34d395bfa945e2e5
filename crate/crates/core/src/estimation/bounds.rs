use serde::{Deserialize, Serialize};

/// A point value with its first-order uncertainty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub delta: f64,
}

/// `F_p >= (V_HV + V_AD) / 2`, clamped to `[0, 1]`.
pub fn polarization_fidelity_bound(v_hv: f64, v_ad: f64) -> f64 {
    (0.5 * (v_hv + v_ad)).clamp(0.0, 1.0)
}

/// Uncertainty of [`polarization_fidelity_bound`] for independent visibility
/// errors.
pub fn polarization_fidelity_delta(dv_hv: f64, dv_ad: f64) -> f64 {
    0.5 * dv_hv.hypot(dv_ad)
}

/// `C >= max(0, 2F - 1)`
pub fn concurrence_bound(f: f64) -> f64 {
    (2.0 * f - 1.0).max(0.0)
}

/// Uncertainty of [`concurrence_bound`] given the fidelity uncertainty.
pub fn concurrence_bound_delta(df: f64) -> f64 {
    2.0 * df
}

/// Under energy conservation the anti-bunching fidelity maximized over the
/// phase is at least the fringe visibility: `F_max >= 2|rho_23| >= V`.
pub fn visibility_fidelity_bound(v: f64) -> f64 {
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_polarization_chain() {
        let f = polarization_fidelity_bound(0.993, 0.964);
        assert!((f - 0.9785).abs() < 1e-12);
        assert!((concurrence_bound(f) - 0.957).abs() < 1e-12);
        assert_eq!(polarization_fidelity_bound(1.0, 1.0), 1.0);
        assert!((polarization_fidelity_delta(0.003, 0.005) - 0.002_915_5).abs() < 1e-6);
    }

    #[test]
    fn concurrence_bound_edges() {
        assert_eq!(concurrence_bound(0.5), 0.0);
        assert_eq!(concurrence_bound(1.0), 1.0);
        assert!((concurrence_bound(0.979) - 0.958).abs() < 1e-12);
    }
}
