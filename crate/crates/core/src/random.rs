//! Random states for property checks and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, CVector, DensityMatrix, PureState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random pure state.
pub fn pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    let v = CVector::from_fn(dim, |_, _| c(gaussian(rng), gaussian(rng)));
    PureState::normalized(v).expect("gaussian vector is nonzero")
}

/// Ginibre-ensemble density matrix `G G† / Tr(G G†)` with `G` of shape
/// `dim x rank`.
pub fn ginibre_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, rank.max(1), |_, _| c(gaussian(rng), gaussian(rng)));
    let m = &g * g.adjoint();
    DensityMatrix::from_unnormalized(m).expect("Ginibre matrix is PSD")
}

/// Full-rank Ginibre state.
pub fn density_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    ginibre_state(dim, dim, rng)
}

/// Random two-qubit frequency state with `rho_11 = rho_44 = 0`, i.e. support
/// only on `|w1 w2>` and `|w2 w1>`.
pub fn energy_conserving_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let rank = rng.random_range(1..=2);
    let g = CMatrix::from_fn(2, rank, |_, _| c(gaussian(rng), gaussian(rng)));
    let inner = &g * g.adjoint();
    let mut m = CMatrix::zeros(4, 4);
    for (r, rr) in [1usize, 2].iter().enumerate() {
        for (k, cc) in [1usize, 2].iter().enumerate() {
            m[(*rr, *cc)] = inner[(r, k)];
        }
    }
    DensityMatrix::from_unnormalized(m).expect("embedded PSD block")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ginibre_states_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rho = density_matrix(16, &mut rng);
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        }
        let ec = energy_conserving_state(&mut rng);
        assert_eq!(ec.get(0, 0).norm(), 0.0);
        assert_eq!(ec.get(3, 3).norm(), 0.0);
    }
}
