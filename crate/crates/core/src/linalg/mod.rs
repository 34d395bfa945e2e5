//! Complex linear algebra and two-photon state primitives.
//!
//! States are stored densely as `nalgebra` complex matrices. The Kronecker
//! product always treats the left operand as the slow index.

mod layout;
mod measures;
mod state;

pub use layout::SubsystemLayout;

/// Subsystem labels of the two-photon layouts.
pub mod labels {
    pub use super::layout::{FREQ_A, FREQ_B, POL_A, POL_B};
}
pub use measures::{
    bell, concurrence, fidelity_pure, hermitian_eigenvalues, hermitian_sqrt, maximally_entangled,
    pauli,
};
pub use state::{DensityMatrix, PureState};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest state dimension handled (two ququarts).
pub const MAX_DIM: usize = 16;

/// Maximum tolerated `|rho_ij - conj(rho_ji)|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum tolerated `|Tr rho - 1|`.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Maximum tolerated `|<psi|psi> - 1|`.
pub const NORM_TOL: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Kronecker product with `a` as the slow index.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `(m + m†) / 2`
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Projector onto a (not necessarily normalized) vector.
pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
