//! Lower bound on the global two-ququart fidelity from the two subspace
//! fidelities, and the resulting entanglement-dimensionality certificate.
//!
//! All targets are expressed in the `Phi+` frame: the polarization target
//! `Psi+` and the frequency target `Psi-` are mapped onto `Phi+` by fixed
//! unitaries on party B (see [`frame_unitary`]).

mod sdp;

pub use sdp::{
    solve, Constraint, ConstraintKind, SdpProblem, SdpSolution, SolverStatus, MAX_ITERATIONS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::labels::{FREQ_A, FREQ_B, POL_A, POL_B};
use crate::linalg::{
    bell, kron, maximally_entangled, pauli, CMatrix, DensityMatrix, SubsystemLayout,
};
use crate::source::Dof;

/// Default solver tolerance of [`certify`].
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Local dimension of each party (polarization x frequency bin).
pub const PARTY_DIM: usize = 4;

/// Inputs echoed into a [`Certificate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub f_p: f64,
    pub f_omega: f64,
    pub tolerance: f64,
    pub mode: ConstraintKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub fidelity_lower_bound: f64,
    pub d_ent: u32,
    pub primal_value: f64,
    pub dual_value: f64,
    pub duality_gap: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<CertificateInputs>,
}

impl Certificate {
    fn from_solution(s: &SdpSolution, inputs: Option<CertificateInputs>) -> Self {
        let bound = s.dual_value.clamp(0.0, 1.0);
        Self {
            fidelity_lower_bound: bound,
            d_ent: entanglement_dimensionality(bound, PARTY_DIM),
            primal_value: s.primal_value,
            dual_value: s.dual_value,
            duality_gap: s.duality_gap(),
            status: s.status,
            iterations: s.iterations,
            inputs,
        }
    }
}

/// `ceil(d F)`, at least 1, ignoring a few ulps of excess so that values such
/// as `4 * 0.75` are not pushed up a dimension by round-off.
pub fn entanglement_dimensionality(fidelity: f64, d: usize) -> u32 {
    let x = d as f64 * fidelity.clamp(0.0, 1.0);
    let guard = 4.0 * f64::EPSILON * x.max(1.0);
    ((x - guard).ceil() as u32).max(1)
}

/// `U` with `(1 x U) |Phi+> = |target>` for the two-qubit subspace target of
/// `dof`: `X` for `Psi+`, `X Z` for `Psi-`.
pub fn frame_unitary(dof: Dof) -> CMatrix {
    match dof {
        Dof::Polarization => pauli::x(),
        Dof::Frequency => pauli::x() * pauli::z(),
    }
}

/// Party-B unitary on the party-major layout taking both subspace targets
/// to `Phi+`.
pub fn party_b_frame() -> CMatrix {
    let b = kron(
        &frame_unitary(Dof::Polarization),
        &frame_unitary(Dof::Frequency),
    );
    kron(&CMatrix::identity(PARTY_DIM, PARTY_DIM), &b.adjoint())
}

/// Expresses a party-major state in the `Phi+` frame.
pub fn to_phi_plus_frame(rho: &DensityMatrix) -> Result<DensityMatrix> {
    rho.conjugate_by(&party_b_frame())
}

/// `(Phi+_2 on the pair of labels) x identity`, lifted to the party-major
/// layout. `Tr(A rho)` is the fidelity of the reduction onto those labels.
pub fn lifted_bell_projector(dof: Dof) -> CMatrix {
    let phi = bell::phi_plus().to_density().into_matrix();
    let id = CMatrix::identity(4, 4);
    let dof_major = match dof {
        Dof::Polarization => kron(&phi, &id),
        Dof::Frequency => kron(&id, &phi),
    };
    SubsystemLayout::dof_major()
        .permute_operator(&dof_major, &[POL_A, FREQ_A, POL_B, FREQ_B])
        .expect("dof-major layout has dimension 16")
}

fn check_fidelity(name: &str, f: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidInput(format!("{name} = {f} outside [0, 1]")));
    }
    Ok(())
}

/// `min Tr(rho Phi+_4)` subject to the polarization and frequency subspace
/// fidelities and `Tr rho = 1`.
pub fn build_fidelity_sdp(f_p: f64, f_omega: f64, mode: ConstraintKind) -> Result<SdpProblem> {
    check_fidelity("f_p", f_p)?;
    check_fidelity("f_omega", f_omega)?;
    let cost = maximally_entangled(PARTY_DIM).to_density().into_matrix();
    let constraints = vec![
        Constraint {
            matrix: lifted_bell_projector(Dof::Polarization),
            rhs: f_p,
            kind: mode,
        },
        Constraint {
            matrix: lifted_bell_projector(Dof::Frequency),
            rhs: f_omega,
            kind: mode,
        },
        Constraint {
            matrix: CMatrix::identity(16, 16),
            rhs: 1.0,
            kind: ConstraintKind::Equal,
        },
    ];
    SdpProblem::new(cost, constraints)
}

/// Solves `problem` and reports the dual objective as the certified bound.
pub fn solve_sdp(problem: &SdpProblem, tol: f64) -> Result<Certificate> {
    let s = solve(problem, tol)?;
    Ok(Certificate::from_solution(&s, None))
}

/// Equality-constrained certificate at the default tolerance.
pub fn certify(f_p: f64, f_omega: f64) -> Result<Certificate> {
    certify_with(f_p, f_omega, DEFAULT_TOLERANCE, ConstraintKind::Equal)
}

pub fn certify_with(f_p: f64, f_omega: f64, tol: f64, mode: ConstraintKind) -> Result<Certificate> {
    let problem = build_fidelity_sdp(f_p, f_omega, mode)?;
    let s = solve(&problem, tol)?;
    Ok(Certificate::from_solution(
        &s,
        Some(CertificateInputs {
            f_p,
            f_omega,
            tolerance: tol,
            mode,
        }),
    ))
}
