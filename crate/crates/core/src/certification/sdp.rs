//! Dense primal-dual interior-point solver for small complex SDPs.
//!
//! A Hermitian program of order `n` is solved through its real symmetric
//! embedding `H -> [[Re H, -Im H], [Im H, Re H]]` of order `2n`, with one
//! extra `1 x 1` block per inequality constraint holding its slack. Search
//! directions use Nesterov-Todd scaling and Mehrotra's predictor-corrector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, DensityMatrix, HERMITIAN_TOL};

pub const MAX_ITERATIONS: usize = 200;

/// Whether a constraint is `Tr(A rho) = b` or `Tr(A rho) >= b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    #[default]
    Equal,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub matrix: CMatrix,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

/// `min Tr(C rho)` over density matrices subject to linear constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    cost: CMatrix,
    constraints: Vec<Constraint>,
}

fn max_hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl SdpProblem {
    /// Checks that every matrix is square, Hermitian and of one order, and
    /// that an equality constraint `Tr(rho) = 1` is present.
    pub fn new(cost: CMatrix, constraints: Vec<Constraint>) -> Result<Self> {
        let n = cost.nrows();
        if n == 0 || cost.ncols() != n {
            return Err(Error::InvalidInput("cost matrix must be square".into()));
        }
        let check = |m: &CMatrix, what: &str| -> Result<()> {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows(),
                });
            }
            if max_hermitian_defect(m) > HERMITIAN_TOL {
                return Err(Error::InvalidInput(format!("{what} is not Hermitian")));
            }
            Ok(())
        };
        check(&cost, "cost")?;
        for (k, con) in constraints.iter().enumerate() {
            check(&con.matrix, &format!("constraint {k}"))?;
            if !con.rhs.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "constraint {k} has non-finite bound"
                )));
            }
        }
        let identity = CMatrix::identity(n, n);
        let has_trace = constraints.iter().any(|con| {
            con.kind == ConstraintKind::Equal
                && (con.rhs - 1.0).abs() < 1e-15
                && (&con.matrix - &identity).iter().all(|z| z.norm() < 1e-15)
        });
        if !has_trace {
            return Err(Error::InvalidInput(
                "problem must include the constraint Tr(rho) = 1".into(),
            ));
        }
        Ok(Self { cost, constraints })
    }

    pub fn dim(&self) -> usize {
        self.cost.nrows()
    }

    pub fn cost(&self) -> &CMatrix {
        &self.cost
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Same problem with constraints listed in `order`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.constraints.len()];
        for &k in order {
            if k >= seen.len() || seen[k] {
                return Err(Error::InvalidInput("order must be a permutation".into()));
            }
            seen[k] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("order must be a permutation".into()));
        }
        Ok(Self {
            cost: self.cost.clone(),
            constraints: order.iter().map(|&k| self.constraints[k].clone()).collect(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Result of [`solve`].
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolverStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub iterations: usize,
    /// Primal optimizer, recovered from the embedding.
    pub rho: CMatrix,
    /// Dual multipliers in constraint order.
    pub multipliers: Vec<f64>,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

impl SdpSolution {
    pub fn duality_gap(&self) -> f64 {
        self.primal_value - self.dual_value
    }

    /// The primal point as a validated state, if it is one.
    pub fn state(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_unnormalized(crate::linalg::hermitize(&self.rho))
    }
}

type Mat = DMatrix<f64>;

fn embed(h: &CMatrix, order: usize) -> Mat {
    let n = h.nrows();
    let mut m = Mat::zeros(order, order);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)] * 0.5;
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i + n, j)] = z.im;
            m[(i, j + n)] = -z.im;
        }
    }
    m
}

fn inner(a: &Mat, b: &Mat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Largest `alpha <= 1` (up to `cap`) keeping `D + alpha S` positive definite,
/// where `D` is a positive diagonal given by `d`.
fn max_step(d: &DVector<f64>, s: &Mat) -> f64 {
    let scale = d.map(|x| 1.0 / x.sqrt());
    let scaled = Mat::from_fn(s.nrows(), s.ncols(), |i, j| scale[i] * s[(i, j)] * scale[j]);
    let lmin = SymmetricEigen::new(sym(&scaled)).eigenvalues.min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

struct Embedded {
    order: usize,
    c: Mat,
    a: Vec<Mat>,
    b: DVector<f64>,
}

impl Embedded {
    fn new(p: &SdpProblem) -> Self {
        let n = p.dim();
        let slacks: Vec<usize> = p
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, con)| con.kind == ConstraintKind::AtLeast)
            .map(|(k, _)| k)
            .collect();
        let order = 2 * n + slacks.len();
        let mut a: Vec<Mat> = p
            .constraints
            .iter()
            .map(|con| embed(&con.matrix, order))
            .collect();
        for (s, &k) in slacks.iter().enumerate() {
            a[k][(2 * n + s, 2 * n + s)] = -1.0;
        }
        Self {
            order,
            c: embed(&p.cost, order),
            a,
            b: DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs)),
        }
    }

    fn apply(&self, x: &Mat) -> DVector<f64> {
        DVector::from_iterator(self.a.len(), self.a.iter().map(|a| inner(a, x)))
    }

    fn adjoint(&self, y: &DVector<f64>) -> Mat {
        let mut m = Mat::zeros(self.order, self.order);
        for (a, &yi) in self.a.iter().zip(y.iter()) {
            m += a * yi;
        }
        m
    }
}

/// Nesterov-Todd scaling: `G` with `G^{-1} X G^{-T} = G^T Z G = diag(v)`.
fn nt_scaling(x: &Mat, z: &Mat) -> Option<(Mat, Mat, DVector<f64>)> {
    let lx = x.clone().cholesky()?.l();
    let lz = z.clone().cholesky()?.l();
    let svd = (lz.transpose() * &lx).svd(true, true);
    let d = svd.singular_values.clone();
    if d.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let q = svd.v_t?.transpose();
    let u = svd.u?;
    let dinv_sqrt = d.map(|v| 1.0 / v.sqrt());
    // G = Lx Q D^{-1/2},  G^{-1} = D^{-1/2} U^T Lz^T
    let g = &lx * &q * Mat::from_diagonal(&dinv_sqrt);
    let g_inv = Mat::from_diagonal(&dinv_sqrt) * u.transpose() * lz.transpose();
    Some((g, g_inv, d))
}

struct Direction {
    dx: Mat,
    dy: DVector<f64>,
    dz: Mat,
    dx_scaled: Mat,
    dz_scaled: Mat,
}

/// Solves the scaled Newton system for complementarity right-hand side `r`
/// (in the scaled space) and residuals `rp = b - A(X)`, `rd = C - Z - A^T y`.
fn direction(
    scaled_a: &[Mat],
    g: &Mat,
    g_inv: &Mat,
    v: &DVector<f64>,
    r: &Mat,
    rp: &DVector<f64>,
    rd: &Mat,
) -> Option<Direction> {
    let n = v.len();
    // dX~ + dZ~ = L_V^{-1}(r)
    let h = Mat::from_fn(n, n, |i, j| 2.0 * r[(i, j)] / (v[i] + v[j]));
    let rd_scaled = g.transpose() * rd * g;
    let m = scaled_a.len();
    let schur = Mat::from_fn(m, m, |i, j| inner(&scaled_a[i], &scaled_a[j]));
    let diff = &h - &rd_scaled;
    let rhs = DVector::from_fn(m, |i, _| rp[i] - inner(&scaled_a[i], &diff));
    let dy = match schur.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            // constraints that coincide on the support of X
            let svd = schur.svd(true, true);
            let eps = 1e-14 * svd.singular_values.max();
            svd.solve(&rhs, eps).ok()?
        }
    };
    let mut dx_scaled = diff;
    for (a, &yi) in scaled_a.iter().zip(dy.iter()) {
        dx_scaled += a * yi;
    }
    let dx_scaled = sym(&dx_scaled);
    let dz_scaled = sym(&(&h - &dx_scaled));
    let dx = sym(&(g * &dx_scaled * g.transpose()));
    let dz = sym(&(g_inv.transpose() * &dz_scaled * g_inv));
    Some(Direction {
        dx,
        dy,
        dz,
        dx_scaled,
        dz_scaled,
    })
}

/// Interior-point solve to absolute duality gap `tol`.
pub fn solve(problem: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let emb = Embedded::new(problem);
    let n = emb.order;
    let m = emb.a.len();
    let feas_tol = (1e-2 * tol).max(1e-12);
    let b_norm = 1.0 + emb.b.norm();
    let c_norm = 1.0 + emb.c.norm();

    let mut x = Mat::identity(n, n);
    let mut z = Mat::identity(n, n) * c_norm.max(1.0);
    let mut y = DVector::zeros(m);
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let mut pinf;
    let mut dinf;

    loop {
        let rp = &emb.b - emb.apply(&x);
        let rd = &emb.c - &z - emb.adjoint(&y);
        pinf = rp.norm() / b_norm;
        dinf = rd.norm() / c_norm;
        let pobj = inner(&emb.c, &x);
        let dobj = emb.b.dot(&y);
        let mu = inner(&x, &z) / n as f64;

        if pinf <= feas_tol
            && dinf <= feas_tol
            && (pobj - dobj).abs() <= 0.5 * tol
            && mu * n as f64 <= 0.5 * tol
        {
            status = SolverStatus::Optimal;
            break;
        }
        if dobj > 1e8 * c_norm && dinf <= 1e-6 {
            status = SolverStatus::Infeasible;
            break;
        }
        if pobj < -1e8 * b_norm && pinf <= 1e-6 {
            status = SolverStatus::Infeasible;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            break;
        }
        iterations += 1;

        let Some((g, g_inv, v)) = nt_scaling(&x, &z) else {
            break;
        };
        let scaled_a: Vec<Mat> = emb.a.iter().map(|a| g.transpose() * a * &g).collect();
        let v2 = Mat::from_diagonal(&v.map(|t| t * t));

        // predictor
        let Some(aff) = direction(&scaled_a, &g, &g_inv, &v, &(-&v2), &rp, &rd) else {
            break;
        };
        let ap = max_step(&v, &aff.dx_scaled).min(1.0);
        let ad = max_step(&v, &aff.dz_scaled).min(1.0);
        let mu_aff = inner(&(&x + &aff.dx * ap), &(&z + &aff.dz * ad)) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let cross = sym(&(&aff.dx_scaled * &aff.dz_scaled));
        let r = Mat::identity(n, n) * (sigma * mu) - v2 - cross;
        let Some(step) = direction(&scaled_a, &g, &g_inv, &v, &r, &rp, &rd) else {
            break;
        };
        let ap = (0.98 * max_step(&v, &step.dx_scaled)).min(1.0);
        let ad = (0.98 * max_step(&v, &step.dz_scaled)).min(1.0);
        x = sym(&(&x + &step.dx * ap));
        z = sym(&(&z + &step.dz * ad));
        y += &step.dy * ad;
    }

    let primal_value = inner(&emb.c, &x);
    let dual_value = emb.b.dot(&y);
    let d = problem.dim();
    let rho = CMatrix::from_fn(d, d, |i, j| {
        let re = x[(i, j)] + x[(i + d, j + d)];
        let im = x[(i + d, j)] - x[(i, j + d)];
        c(0.5 * re, 0.5 * im)
    });
    Ok(SdpSolution {
        status,
        primal_value,
        dual_value,
        iterations,
        rho,
        multipliers: y.iter().copied().collect(),
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
    })
}
