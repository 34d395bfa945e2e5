use serde::{Deserialize, Serialize};

use super::{CMatrix, CVector, DensityMatrix, PureState};
use crate::error::{Error, Result};

/// Ordered tensor factors of a composite Hilbert space.
///
/// The global convention is party-major, `(p_A, w_A, p_B, w_B)`: polarization
/// and frequency of the photon in spatial mode `a`, then the same for mode `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

pub const POL_A: &str = "p_A";
pub const FREQ_A: &str = "w_A";
pub const POL_B: &str = "p_B";
pub const FREQ_B: &str = "w_B";

impl SubsystemLayout {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.is_empty() || dims.len() != labels.len() {
            return Err(Error::InvalidInput(
                "layout needs one label per factor and at least one factor".into(),
            ));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidInput(
                "factor dimensions must be positive".into(),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidInput(format!(
                    "duplicate subsystem label {l}"
                )));
            }
        }
        Ok(Self { dims, labels })
    }

    /// `(p_A, w_A, p_B, w_B)`, the ordering every state in this crate uses.
    pub fn party_major() -> Self {
        Self::qubits(&[POL_A, FREQ_A, POL_B, FREQ_B])
    }

    /// `(p_A, p_B, w_A, w_B)`, the degree-of-freedom-major ordering in which the
    /// hyperentangled state is naturally written as a polarization state
    /// tensored with a frequency state.
    pub fn dof_major() -> Self {
        Self::qubits(&[POL_A, POL_B, FREQ_A, FREQ_B])
    }

    /// Two qubits labelled `a`, `b`.
    pub fn two_qubits() -> Self {
        Self::qubits(&["a", "b"])
    }

    fn qubits(labels: &[&str]) -> Self {
        Self {
            dims: vec![2; labels.len()],
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown subsystem label {label}")))
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        Ok(())
    }

    /// Mixed-radix digits of `index`, most significant factor first.
    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }

    fn compose(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (d, n)| acc * n + d)
    }

    /// Reorders `labels` to `order`, returning the new layout and, for every
    /// new flat index, the old flat index it reads from.
    fn permutation(&self, order: &[&str]) -> Result<(SubsystemLayout, Vec<usize>)> {
        if order.len() != self.labels.len() {
            return Err(Error::InvalidInput(
                "permutation must list every subsystem exactly once".into(),
            ));
        }
        let positions = order
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        let target = SubsystemLayout::new(
            positions.iter().map(|&p| self.dims[p]).collect(),
            order.to_vec(),
        )?;
        let map = (0..self.dim())
            .map(|new| {
                let new_digits = target.digits(new);
                let mut old_digits = vec![0; positions.len()];
                for (k, &p) in positions.iter().enumerate() {
                    old_digits[p] = new_digits[k];
                }
                self.compose(&old_digits)
            })
            .collect();
        Ok((target, map))
    }

    /// Reorders the factors of a density matrix.
    pub fn permute(&self, rho: &DensityMatrix, order: &[&str]) -> Result<(DensityMatrix, Self)> {
        self.check(rho.dim())?;
        let (target, map) = self.permutation(order)?;
        let n = rho.dim();
        let m = CMatrix::from_fn(n, n, |i, j| rho.get(map[i], map[j]));
        Ok((DensityMatrix::from_trusted(m), target))
    }

    /// Reorders the factors of a state vector.
    pub fn permute_pure(&self, psi: &PureState, order: &[&str]) -> Result<(PureState, Self)> {
        self.check(psi.dim())?;
        let (target, map) = self.permutation(order)?;
        let v = CVector::from_fn(psi.dim(), |i, _| psi.amplitudes()[map[i]]);
        Ok((PureState::normalized(v)?, target))
    }

    /// Reorders an arbitrary operator's factors (e.g. an observable).
    pub fn permute_operator(&self, op: &CMatrix, order: &[&str]) -> Result<CMatrix> {
        self.check(op.nrows())?;
        let (_, map) = self.permutation(order)?;
        let n = op.nrows();
        Ok(CMatrix::from_fn(n, n, |i, j| op[(map[i], map[j])]))
    }

    /// Traces out every factor not in `keep`. Kept factors retain their
    /// relative order in this layout regardless of the order of `keep`.
    pub fn partial_trace(&self, rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
        self.check(rho.dim())?;
        if keep.is_empty() {
            return Err(Error::InvalidInput(
                "must keep at least one subsystem".into(),
            ));
        }
        let mut kept = keep
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        kept.sort_unstable();
        kept.dedup();
        let traced: Vec<usize> = (0..self.dims.len()).filter(|k| !kept.contains(k)).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&k| self.dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| self.dims[k]).collect();
        let dk: usize = kept_dims.iter().product();
        let dt: usize = traced_dims.iter().product();

        // full[k * dt + t] = flat index of (kept digits of k, traced digits of t)
        let mut full = vec![0usize; dk * dt];
        let mut digits = vec![0usize; self.dims.len()];
        for k in 0..dk {
            let kd = split_digits(k, &kept_dims);
            for t in 0..dt {
                let td = split_digits(t, &traced_dims);
                for (slot, &pos) in kept.iter().enumerate() {
                    digits[pos] = kd[slot];
                }
                for (slot, &pos) in traced.iter().enumerate() {
                    digits[pos] = td[slot];
                }
                full[k * dt + t] = self.compose(&digits);
            }
        }

        let m = CMatrix::from_fn(dk, dk, |r, c| {
            (0..dt)
                .map(|t| rho.get(full[r * dt + t], full[c * dt + t]))
                .sum()
        });
        Ok(DensityMatrix::from_trusted(m))
    }
}

fn split_digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::bell;

    #[test]
    fn trace_out_product_state() {
        let ket = PureState::basis(4, 1).unwrap(); // |01>
        let rho = ket.to_density();
        let red = SubsystemLayout::two_qubits()
            .partial_trace(&rho, &["a"])
            .unwrap();
        let expected = PureState::basis(2, 0).unwrap().to_density();
        assert!(red.max_abs_diff(expected.matrix()) < 1e-15);
    }

    #[test]
    fn bell_reduction_is_maximally_mixed() {
        let rho = bell::phi_plus().to_density();
        let red = SubsystemLayout::two_qubits()
            .partial_trace(&rho, &["a"])
            .unwrap();
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(red.max_abs_diff(mixed.matrix()) < 1e-15);
    }

    #[test]
    fn inconsistent_layout_is_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let err = SubsystemLayout::party_major().partial_trace(&rho, &[POL_A]);
        assert!(matches!(
            err,
            Err(Error::DimensionMismatch {
                expected: 16,
                found: 4
            })
        ));
    }

    #[test]
    fn unknown_or_empty_keep_rejected() {
        let rho = DensityMatrix::maximally_mixed(16).unwrap();
        let layout = SubsystemLayout::party_major();
        assert!(layout.partial_trace(&rho, &[]).is_err());
        assert!(layout.partial_trace(&rho, &["x"]).is_err());
    }

    #[test]
    fn permutation_round_trip() {
        let layout = SubsystemLayout::party_major();
        let psi = PureState::basis(16, 0b1001).unwrap(); // p_A=1, w_B=1
        let (moved, dof) = layout
            .permute_pure(&psi, &[POL_A, POL_B, FREQ_A, FREQ_B])
            .unwrap();
        assert_eq!(dof, SubsystemLayout::dof_major());
        // dof-major digits: p_A=1, p_B=0, w_A=0, w_B=1
        assert_eq!(moved.amplitudes()[0b1001].re, 1.0);
        let psi2 = PureState::basis(16, 0b0110).unwrap(); // w_A=1, p_B=1
        let (moved2, _) = layout
            .permute_pure(&psi2, &[POL_A, POL_B, FREQ_A, FREQ_B])
            .unwrap();
        assert_eq!(moved2.amplitudes()[0b0110].re, 1.0);
        let psi3 = PureState::basis(16, 0b0100).unwrap(); // w_A=1
        let (moved3, _) = layout
            .permute_pure(&psi3, &[POL_A, POL_B, FREQ_A, FREQ_B])
            .unwrap();
        assert_eq!(moved3.amplitudes()[0b0010].re, 1.0);
        let (back, back_layout) = dof
            .permute_pure(&moved3, &[POL_A, FREQ_A, POL_B, FREQ_B])
            .unwrap();
        assert_eq!(back_layout, layout);
        assert_eq!(back, psi3);
    }
}
