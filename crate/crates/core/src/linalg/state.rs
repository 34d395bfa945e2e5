use super::{
    hermitian_eigenvalues, hermitize, kron, projector, CMatrix, CVector, C64, HERMITIAN_TOL,
    MAX_DIM, NORM_TOL, PSD_TOL, TRACE_TOL,
};
use crate::error::{Error, Result};

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    /// Wraps an already-normalized vector.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has squared norm {norm}"
            )));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Computational basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::InvalidInput(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        check_dim(self.dim() * other.dim())?;
        Ok(PureState {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    /// `<self|other>`
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_trusted(projector(&self.amplitudes))
    }

    /// `U|psi>` for a unitary `U` (not checked).
    pub fn apply(&self, unitary: &CMatrix) -> Result<PureState> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        PureState::normalized(unitary * &self.amplitudes)
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elements: CMatrix,
}

impl DensityMatrix {
    /// Validates `elements` against the Hermitian, trace and PSD tolerances.
    pub fn new(elements: CMatrix) -> Result<Self> {
        let n = elements.nrows();
        if elements.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: elements.ncols(),
            });
        }
        check_dim(n)?;
        let mut asym = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                asym = asym.max((elements[(i, j)] - elements[(j, i)].conj()).norm());
            }
        }
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (max asymmetry {asym:e})"
            )));
        }
        let state = Self::from_trusted(elements);
        state.check_trace_and_psd()?;
        Ok(state)
    }

    /// Hermitizes and wraps without validation. Callers guarantee unit trace
    /// and positivity up to round-off.
    pub(crate) fn from_trusted(elements: CMatrix) -> Self {
        Self {
            elements: hermitize(&elements),
        }
    }

    /// Hermitizes, normalizes the trace to one, then validates positivity.
    pub fn from_unnormalized(elements: CMatrix) -> Result<Self> {
        let tr = elements.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("non-positive trace {tr}")));
        }
        let state = Self::from_trusted(elements.unscale(tr));
        state.check_trace_and_psd()?;
        Ok(state)
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            elements: CMatrix::identity(dim, dim).unscale(dim as f64),
        })
    }

    fn check_trace_and_psd(&self) -> Result<()> {
        let tr = self.elements.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (minimum eigenvalue {min:e})"
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elements
    }

    pub fn into_matrix(self) -> CMatrix {
        self.elements
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.elements[(row, col)]
    }

    pub fn trace(&self) -> f64 {
        self.elements.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.elements)
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = hermitian_eigenvalues(&self.elements)
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim() * other.dim())?;
        Ok(Self::from_trusted(kron(&self.elements, &other.elements)))
    }

    /// `weight * self + (1 - weight) * other`
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidInput(format!(
                "mixing weight {weight} outside [0, 1]"
            )));
        }
        Ok(Self::from_trusted(
            self.elements.scale(weight) + other.elements.scale(1.0 - weight),
        ))
    }

    /// `U rho U†`
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<DensityMatrix> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: unitary.nrows(),
            });
        }
        Ok(Self::from_trusted(
            unitary * &self.elements * unitary.adjoint(),
        ))
    }

    /// `Tr(rho O)` for a Hermitian observable; the imaginary part is dropped.
    pub fn expectation(&self, observable: &CMatrix) -> Result<f64> {
        if observable.nrows() != self.dim() || observable.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: observable.nrows(),
            });
        }
        Ok(super::trace_product(&self.elements, observable).re)
    }

    /// Largest elementwise distance to another matrix of equal size.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.elements
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::DimensionOverflow(dim));
    }
    Ok(())
}
