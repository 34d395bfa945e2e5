use serde::{Deserialize, Serialize};

use super::fringe::{fringe_envelope, FringeModelParams};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;

/// Coincidence split between the beam-splitter output ports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialModeStats {
    /// Photons leave through different ports (anti-bunching).
    pub p_opposite: f64,
    /// Photons leave through the same port (bunching).
    pub p_identical: f64,
}

/// Spatial-mode statistics of the frequency state at delay `tau`.
///
/// The delay acts as the phase `-mu tau` on the upper bin, damped by the
/// triangular envelope of `params`:
///
/// `p_opposite = 1/2 - env(tau) Re(e^{-i mu tau} rho_23) / (rho_22 + rho_33)`.
///
/// Visibility and phase come from the coherence of `rho_omega`; `params`
/// contributes the detuning and coherence time. For the restricted state of
/// a fit this is exactly the fringe model evaluated with the fitted values.
pub fn spatial_mode_stats(
    rho_omega: &DensityMatrix,
    tau: f64,
    params: &FringeModelParams,
) -> Result<SpatialModeStats> {
    if rho_omega.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho_omega.dim(),
        });
    }
    params.validate()?;
    let weight = rho_omega.get(1, 1).re + rho_omega.get(2, 2).re;
    if weight <= 0.0 {
        return Err(Error::DegenerateInput(
            "no population in the anti-correlated bins".into(),
        ));
    }
    let x = -params.detuning * tau;
    let rotated = rho_omega.get(1, 2) * num_complex::Complex64::new(x.cos(), x.sin());
    let env = fringe_envelope(tau, params.coherence_time);
    let p_opposite = (0.5 - env * rotated.re / weight).clamp(0.0, 1.0);
    Ok(SpatialModeStats {
        p_opposite,
        p_identical: 1.0 - p_opposite,
    })
}
