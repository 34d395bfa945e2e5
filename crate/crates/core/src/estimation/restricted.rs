use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, DensityMatrix};

/// Energy-conserving two-bin frequency state, parametrized by the pair
/// balance and the HOM fringe parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictedState {
    /// Population of `|w1 w2>`.
    pub p_omega: f64,
    pub visibility: f64,
    /// Fringe phase (rad).
    pub phase: f64,
}

impl RestrictedState {
    pub fn new(p_omega: f64, visibility: f64, phase: f64) -> Result<Self> {
        let s = Self {
            p_omega,
            visibility,
            phase,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks `0 <= p <= 1` and `0 <= V/2 <= sqrt(p (1 - p))`.
    pub fn validate(&self) -> Result<()> {
        let p = self.p_omega;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidState(format!("balance {p} outside [0, 1]")));
        }
        if !(self.visibility >= 0.0) || !self.phase.is_finite() {
            return Err(Error::InvalidState(format!(
                "visibility {} must be non-negative",
                self.visibility
            )));
        }
        let limit = (p * (1.0 - p)).sqrt();
        if 0.5 * self.visibility > limit + 1e-12 {
            return Err(Error::InvalidState(format!(
                "coherence {} exceeds sqrt(p(1-p)) = {limit}",
                0.5 * self.visibility
            )));
        }
        Ok(())
    }

    /// `<Psi-|rho|Psi-> = 1/2 - (V/2) cos(phi)`, independent of the balance.
    pub fn fidelity(&self) -> f64 {
        (0.5 - 0.5 * self.visibility * self.phase.cos()).clamp(0.0, 1.0)
    }
}

/// Density matrix in the basis `{w1w1, w1w2, w2w1, w2w2}` with inner block
/// `[[p, (V/2) e^{-i phi}], [(V/2) e^{i phi}, 1 - p]]` and all other entries 0.
pub fn restricted_rho(rs: &RestrictedState) -> Result<DensityMatrix> {
    rs.validate()?;
    let half = 0.5 * rs.visibility;
    let mut m = CMatrix::zeros(4, 4);
    m[(1, 1)] = c(rs.p_omega, 0.0);
    m[(2, 2)] = c(1.0 - rs.p_omega, 0.0);
    m[(1, 2)] = c(half * rs.phase.cos(), -half * rs.phase.sin());
    m[(2, 1)] = m[(1, 2)].conj();
    DensityMatrix::new(m)
}
