use nalgebra::DVector;

use super::{c, hermitize, kron, CMatrix, CVector, DensityMatrix, PureState};
use crate::error::{Error, Result};

/// Eigenvalues of the Hermitian part of `m`, unsorted.
pub fn hermitian_eigenvalues(m: &CMatrix) -> DVector<f64> {
    hermitize(m).symmetric_eigenvalues()
}

/// Principal square root of a positive semidefinite Hermitian matrix; negative
/// round-off eigenvalues are clamped to zero.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let eig = hermitize(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt(), 0.0));
    &eig.eigenvectors * CMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// `<psi|rho|psi>`, clamped to `[0, 1]`.
pub fn fidelity_pure(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.dim(),
        });
    }
    let v = psi.amplitudes();
    let f = v.dotc(&(rho.matrix() * v));
    debug_assert!(f.im.abs() < 1e-12);
    Ok(f.re.clamp(0.0, 1.0))
}

/// Wootters concurrence of a two-qubit state.
///
/// Uses the Hermitian form `sqrt(sqrt(rho) rho~ sqrt(rho))`, whose spectrum
/// equals the square roots of the eigenvalues of `rho rho~`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let yy = kron(&pauli::y(), &pauli::y());
    let flipped = &yy * rho.matrix().conjugate() * &yy;
    let root = hermitian_sqrt(rho.matrix());
    let m = &root * flipped * &root;
    let mut lambdas: Vec<f64> = hermitian_eigenvalues(&m)
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// `(1/sqrt(d)) sum_i |ii>`
pub fn maximally_entangled(d: usize) -> PureState {
    assert!(d >= 2, "maximally entangled state needs d >= 2");
    let amp = 1.0 / (d as f64).sqrt();
    let v = CVector::from_fn(d * d, |k, _| {
        if k / d == k % d {
            c(amp, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    PureState::normalized(v).expect("dimension within bounds")
}

/// Two-qubit Bell states in the basis `{|00>, |01>, |10>, |11>}`.
pub mod bell {
    use super::*;

    fn two_qubit(amps: [(f64, f64); 4]) -> PureState {
        let v = CVector::from_iterator(4, amps.iter().map(|&(re, im)| c(re, im)));
        PureState::normalized(v).expect("nonzero")
    }

    pub fn phi_plus() -> PureState {
        two_qubit([(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])
    }

    pub fn phi_minus() -> PureState {
        two_qubit([(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)])
    }

    /// `(|01> + e^{i phase}|10>) / sqrt(2)`
    pub fn psi_phased(phase: f64) -> PureState {
        two_qubit([
            (0.0, 0.0),
            (1.0, 0.0),
            (phase.cos(), phase.sin()),
            (0.0, 0.0),
        ])
    }

    pub fn psi_plus() -> PureState {
        psi_phased(0.0)
    }

    pub fn psi_minus() -> PureState {
        two_qubit([(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)])
    }
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
    }
}
