use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::fringe::golden_min;
use crate::error::{Error, Result};
use crate::linalg::{bell, c, fidelity_pure, CMatrix, DensityMatrix};

/// Anti-bunching probability after a relative phase `phi` on photon B's
/// upper bin: `<Psi-| (1 x U) rho (1 x U)† |Psi->` with `U = diag(1, e^{i phi})`.
pub fn hom_povm_prob(rho_omega: &DensityMatrix, phi: f64) -> Result<f64> {
    if rho_omega.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho_omega.dim(),
        });
    }
    let mut u = CMatrix::zeros(4, 4);
    let e = c(phi.cos(), phi.sin());
    for (k, d) in [c(1.0, 0.0), e, c(1.0, 0.0), e].into_iter().enumerate() {
        u[(k, k)] = d;
    }
    fidelity_pure(&rho_omega.conjugate_by(&u)?, &bell::psi_minus())
}

/// Extremes of [`hom_povm_prob`] over the phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmExtrema {
    pub f_max: f64,
    pub f_min: f64,
    pub phi_max: f64,
    pub phi_min: f64,
}

impl PovmExtrema {
    /// `(F_max - F_min) / (F_max + F_min)`
    pub fn visibility(&self) -> f64 {
        let s = self.f_max + self.f_min;
        if s > 0.0 {
            (self.f_max - self.f_min) / s
        } else {
            0.0
        }
    }
}

/// Grid search over `phi` in `[0, 2 pi)` refined by golden-section search.
pub fn povm_extrema(rho_omega: &DensityMatrix, grid: usize) -> Result<PovmExtrema> {
    let grid = grid.max(8);
    let step = TAU / grid as f64;
    let f = |phi: f64| hom_povm_prob(rho_omega, phi).unwrap_or(f64::NAN);
    hom_povm_prob(rho_omega, 0.0)?;
    let values: Vec<f64> = (0..grid).map(|k| f(k as f64 * step)).collect();
    let arg = |better: fn(f64, f64) -> bool| {
        let mut best = 0;
        for k in 1..grid {
            if better(values[k], values[best]) {
                best = k;
            }
        }
        best as f64 * step
    };
    let kmax = arg(|a, b| a > b);
    let kmin = arg(|a, b| a < b);
    let phi_max = golden_min(|p| -f(p), kmax - step, kmax + step, 1e-12);
    let phi_min = golden_min(f, kmin - step, kmin + step, 1e-12);
    Ok(PovmExtrema {
        f_max: f(phi_max),
        f_min: f(phi_min),
        phi_max: phi_max.rem_euclid(TAU),
        phi_min: phi_min.rem_euclid(TAU),
    })
}

/// `F_max/min = (rho_22 + rho_33)/2 +/- |rho_23|` (1-based indices).
pub fn povm_extrema_closed_form(rho_omega: &DensityMatrix) -> Result<PovmExtrema> {
    if rho_omega.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho_omega.dim(),
        });
    }
    let mean = 0.5 * (rho_omega.get(1, 1).re + rho_omega.get(2, 2).re);
    let coh = rho_omega.get(1, 2);
    // F(phi) = mean - |coh| cos(phi + arg coh)
    let phi_max = (std::f64::consts::PI - coh.arg()).rem_euclid(TAU);
    let phi_min = (-coh.arg()).rem_euclid(TAU);
    Ok(PovmExtrema {
        f_max: mean + coh.norm(),
        f_min: mean - coh.norm(),
        phi_max,
        phi_min,
    })
}
