//! Two-photon states produced by the bidirectionally pumped Sagnac source and
//! the polarization correlation measurements on them.
//!
//! Basis conventions: polarization `H = 0`, `V = 1`; frequency bins
//! `w1 = 0`, `w2 = 1`. States live in the party-major layout
//! `(p_A, w_A, p_B, w_B)`, where party A is the photon leaving the PBS in
//! spatial mode `a`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::labels::{FREQ_A, FREQ_B, POL_A, POL_B};
use crate::linalg::{c, kron, CMatrix, CVector, DensityMatrix, PureState, SubsystemLayout};

/// Propagation direction of the pump in the Sagnac loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[serde(rename = "cw")]
    Clockwise,
    #[serde(rename = "ccw")]
    CounterClockwise,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    #[default]
    None,
    /// Mix the targeted degree of freedom with its maximally mixed state.
    Isotropic,
    /// Damp coherences of the targeted degree of freedom.
    DephasingPerDof,
}

/// Degree of freedom of the photon pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dof {
    Polarization,
    Frequency,
}

impl Dof {
    fn labels(self) -> [&'static str; 2] {
        match self {
            Dof::Polarization => [POL_A, POL_B],
            Dof::Frequency => [FREQ_A, FREQ_B],
        }
    }

    /// Bit offsets of the (party A, party B) digits in a party-major index.
    fn bits(self) -> (usize, usize) {
        match self {
            Dof::Polarization => (3, 1),
            Dof::Frequency => (2, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseStrength {
    #[serde(default)]
    pub polarization: f64,
    #[serde(default)]
    pub frequency: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// Relative phase between the two crystals' emissions (rad).
    pub phase_phi: f64,
    /// Phase of the pump polarization state (rad).
    pub pump_phase: f64,
    #[serde(default)]
    pub noise_model: NoiseModel,
    #[serde(default)]
    pub noise_strength: NoiseStrength,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            phase_phi: PI,
            pump_phase: 0.0,
            noise_model: NoiseModel::None,
            noise_strength: NoiseStrength::default(),
        }
    }
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("polarization", self.noise_strength.polarization),
            ("frequency", self.noise_strength.frequency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "{name} noise strength {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Linear polarizer axes in arms `a` and `b`, measured from H.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarizerSetting {
    angle_a: f64,
    angle_b: f64,
}

impl PolarizerSetting {
    pub fn new(angle_a: f64, angle_b: f64) -> Self {
        Self {
            angle_a: angle_a.rem_euclid(PI),
            angle_b: angle_b.rem_euclid(PI),
        }
    }

    pub fn angle_a(&self) -> f64 {
        self.angle_a
    }

    pub fn angle_b(&self) -> f64 {
        self.angle_b
    }
}

/// Mutually unbiased polarization analysis bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    HV,
    AD,
}

impl Basis {
    /// Axis of the fixed polarizer in arm `a`.
    pub fn axis(self) -> f64 {
        match self {
            Basis::HV => 0.0,
            Basis::AD => FRAC_PI_4,
        }
    }
}

/// Polarizer angles swept in arm `b` for visibility estimates.
pub const VISIBILITY_SWEEP_POINTS: usize = 360;

fn ket(p_a: usize, w_a: usize, p_b: usize, w_b: usize) -> usize {
    8 * p_a + 4 * w_a + 2 * p_b + w_b
}

/// The 16-dimensional state emitted in one direction of the loop.
///
/// Counter-clockwise: `(|H w1>_a |V w2>_b + e^{i phi} |V w1>_b |H w2>_a)/sqrt 2`.
/// Clockwise: `-(e^{i phi} |H w1>_b |V w2>_a + |V w1>_a |H w2>_b)/sqrt 2`.
/// At `phi = pi` both reduce to the PBS-sorted states of the source, and for
/// every `phi` both carry the same frequency state
/// `(|w1 w2> + e^{i phi} |w2 w1>)/sqrt 2`.
pub fn directional_state(direction: Direction, phi: f64) -> PureState {
    let phase = c(phi.cos(), phi.sin());
    let mut v = CVector::zeros(16);
    match direction {
        Direction::CounterClockwise => {
            v[ket(0, 0, 1, 1)] = c(FRAC_1_SQRT_2, 0.0);
            v[ket(0, 1, 1, 0)] = phase * FRAC_1_SQRT_2;
        }
        Direction::Clockwise => {
            v[ket(1, 1, 0, 0)] = -phase * FRAC_1_SQRT_2;
            v[ket(1, 0, 0, 1)] = c(-FRAC_1_SQRT_2, 0.0);
        }
    }
    PureState::new(v).expect("unit norm by construction")
}

/// Coherent superposition `(|ccw> - e^{i phi_p} |cw>)/sqrt 2` of the two
/// directional states: `|Psi+_p(phi_p)> (x) (|w1 w2> + e^{i phi}|w2 w1>)/sqrt 2`.
pub fn ideal_hyper_state(phi: f64, pump_phase: f64) -> PureState {
    let ccw = directional_state(Direction::CounterClockwise, phi);
    let cw = directional_state(Direction::Clockwise, phi);
    let pump = c(pump_phase.cos(), pump_phase.sin());
    let v = (ccw.amplitudes() - cw.amplitudes() * pump).scale(FRAC_1_SQRT_2);
    PureState::normalized(v).expect("orthogonal directional states")
}

/// Source state with the configured noise channel applied per degree of freedom.
pub fn hyper_state(params: &SourceParams) -> Result<DensityMatrix> {
    params.validate()?;
    let rho = ideal_hyper_state(params.phase_phi, params.pump_phase).to_density();
    let rho = apply_noise(
        &rho,
        Dof::Polarization,
        params.noise_model,
        params.noise_strength.polarization,
    )?;
    apply_noise(
        &rho,
        Dof::Frequency,
        params.noise_model,
        params.noise_strength.frequency,
    )
}

/// Applies one noise channel to one degree of freedom of a party-major state.
pub fn apply_noise(
    rho: &DensityMatrix,
    dof: Dof,
    model: NoiseModel,
    strength: f64,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidInput(format!(
            "noise strength {strength} outside [0, 1]"
        )));
    }
    let layout = SubsystemLayout::party_major();
    if rho.dim() != layout.dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.dim(),
            found: rho.dim(),
        });
    }
    if strength == 0.0 || model == NoiseModel::None {
        return Ok(rho.clone());
    }
    match model {
        NoiseModel::None => unreachable!(),
        NoiseModel::Isotropic => {
            let other = match dof {
                Dof::Polarization => Dof::Frequency,
                Dof::Frequency => Dof::Polarization,
            };
            let rest = layout.partial_trace(rho, &other.labels())?;
            let mixed = DensityMatrix::maximally_mixed(4)?;
            // dof-major product, then back to party-major
            let (product, dof_layout) = match dof {
                Dof::Polarization => (mixed.tensor(&rest)?, SubsystemLayout::dof_major()),
                Dof::Frequency => (rest.tensor(&mixed)?, SubsystemLayout::dof_major()),
            };
            let (product, _) = dof_layout.permute(&product, &[POL_A, FREQ_A, POL_B, FREQ_B])?;
            rho.mix(&product, 1.0 - strength)
        }
        NoiseModel::DephasingPerDof => {
            let (ba, bb) = dof.bits();
            let digits = |i: usize| ((i >> ba) & 1, (i >> bb) & 1);
            let n = rho.dim();
            let m = CMatrix::from_fn(n, n, |i, j| {
                let e = rho.get(i, j);
                if digits(i) == digits(j) {
                    e
                } else {
                    e * (1.0 - strength)
                }
            });
            Ok(DensityMatrix::from_trusted(m))
        }
    }
}

/// A renormalized post-selected state and the probability of the selection.
#[derive(Clone, Debug)]
pub struct PostSelected {
    pub state: DensityMatrix,
    pub success_probability: f64,
}

/// Keeps only events with anti-parallel polarizations across the two parties
/// (`HV` or `VH`), as the PBS does when coincidences between its two output
/// ports are post-selected.
pub fn postselect_antiparallel(rho: &DensityMatrix) -> Result<PostSelected> {
    if rho.dim() != 16 {
        return Err(Error::DimensionMismatch {
            expected: 16,
            found: rho.dim(),
        });
    }
    let keep = |i: usize| ((i >> 3) & 1) != ((i >> 1) & 1);
    let m = CMatrix::from_fn(16, 16, |i, j| {
        if keep(i) && keep(j) {
            rho.get(i, j)
        } else {
            c(0.0, 0.0)
        }
    });
    let p = m.trace().re;
    if p <= 1e-14 {
        return Err(Error::DegenerateInput(
            "state has no weight on anti-parallel polarizations".into(),
        ));
    }
    Ok(PostSelected {
        state: DensityMatrix::from_trusted(m.unscale(p)),
        success_probability: p,
    })
}

/// Two-qubit polarization state of a party-major 16-dimensional state.
pub fn polarization_reduction(rho: &DensityMatrix) -> Result<DensityMatrix> {
    SubsystemLayout::party_major().partial_trace(rho, &[POL_A, POL_B])
}

/// Two-qubit frequency state of a party-major 16-dimensional state.
pub fn frequency_reduction(rho: &DensityMatrix) -> Result<DensityMatrix> {
    SubsystemLayout::party_major().partial_trace(rho, &[FREQ_A, FREQ_B])
}

fn polarizer(theta: f64) -> CMatrix {
    let v = CVector::from_vec(vec![c(theta.cos(), 0.0), c(theta.sin(), 0.0)]);
    &v * v.adjoint()
}

/// Probability that both photons pass their linear polarizers.
pub fn polarization_coincidence_prob(
    rho_p: &DensityMatrix,
    setting: &PolarizerSetting,
) -> Result<f64> {
    if rho_p.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho_p.dim(),
        });
    }
    let op = kron(&polarizer(setting.angle_a), &polarizer(setting.angle_b));
    Ok(rho_p.expectation(&op)?.clamp(0.0, 1.0))
}

/// Coincidence probabilities with arm `a` fixed on the basis axis and arm `b`
/// stepped over `[0, pi)` in [`VISIBILITY_SWEEP_POINTS`] equal steps.
pub fn polarization_sweep(rho_p: &DensityMatrix, basis: Basis) -> Result<Vec<(f64, f64)>> {
    (0..VISIBILITY_SWEEP_POINTS)
        .map(|k| {
            let theta_b = PI * k as f64 / VISIBILITY_SWEEP_POINTS as f64;
            let p = polarization_coincidence_prob(
                rho_p,
                &PolarizerSetting::new(basis.axis(), theta_b),
            )?;
            Ok((theta_b, p))
        })
        .collect()
}

/// Fringe visibility `(p_max - p_min)/(p_max + p_min)` over the polarizer sweep.
pub fn basis_visibility(rho_p: &DensityMatrix, basis: Basis) -> Result<f64> {
    let sweep = polarization_sweep(rho_p, basis)?;
    let (min, max) = sweep
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, p)| {
            (lo.min(p), hi.max(p))
        });
    if max + min <= 0.0 {
        return Err(Error::DegenerateInput(
            "all coincidence probabilities vanish".into(),
        ));
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}
