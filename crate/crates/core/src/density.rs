//! Positive semidefinite operators of trace at most one on a tensor space.

use crate::error::{Error, Result};
use crate::linalg::{self, c, eigvalsh, ComplexMatrix, ComplexVector};
use crate::space::TensorSpace;

/// Tolerance on trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

/// Subnormalized states are first-class citizens: `0 <= tr rho <= 1`.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
    space: TensorSpace,
}

impl DensityOperator {
    /// Validates positivity and trace, then stores the Hermitian part.
    pub fn new(matrix: ComplexMatrix, space: TensorSpace) -> Result<Self> {
        let dim = space.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(matrix.nrows(), dim));
        }
        let scale = 1.0 + matrix.norm();
        if linalg::hermiticity_residual(&matrix) > 1e-9 * scale {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let matrix = linalg::hermitize(&matrix);
        let spec = eigvalsh(&matrix);
        let min = spec.last().copied().unwrap_or(0.0);
        if min < -STATE_TOL * spec[0].abs().max(1.0) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        let t = matrix.trace().re;
        if t > 1.0 + STATE_TOL {
            return Err(Error::TraceExceedsOne(t));
        }
        Ok(Self { matrix, space })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(matrix: ComplexMatrix, space: TensorSpace) -> Self {
        Self { matrix: linalg::hermitize(&matrix), space }
    }

    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, TensorSpace::new(vec![n])?)
    }

    pub fn pure(vector: &ComplexVector, space: TensorSpace) -> Result<Self> {
        if vector.len() != space.total_dim() {
            return Err(Error::DimensionMismatch(vector.len(), space.total_dim()));
        }
        Self::new(linalg::outer(vector), space)
    }

    pub fn maximally_mixed(space: TensorSpace) -> Self {
        let d = space.total_dim();
        Self { matrix: linalg::identity(d) / c(d as f64, 0.0), space }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= STATE_TOL
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized(self.trace()))
        }
    }

    /// Spectrum, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        eigvalsh(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.matrix * c(factor, 0.0), self.space.clone())
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.space.local_dims().to_vec();
        dims.extend_from_slice(other.space.local_dims());
        Self { matrix: linalg::kron(&self.matrix, &other.matrix), space: TensorSpace::new(dims).expect("non-empty") }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        partial_trace(self, keep)
    }

    /// Reorders tensor factors: factor `k` of the result is factor `perm[k]`
    /// of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityOperator> {
        let n = self.space.num_factors();
        let mut seen = perm.to_vec();
        seen.sort_unstable();
        if seen != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidRegion(format!("{perm:?} is not a permutation")));
        }
        let new_space = TensorSpace::new(perm.iter().map(|&k| self.space.local_dims()[k]).collect())?;
        // offsets of new multi-indices expressed in the old flat index
        let map = self.space.offsets(perm);
        let d = self.dim();
        let m = ComplexMatrix::from_fn(d, d, |i, j| self.matrix[(map[i], map[j])]);
        Ok(Self { matrix: m, space: new_space })
    }
}

/// Traces out every factor not in `keep`. The result's factors follow the
/// ascending order of `keep`.
pub fn partial_trace(op: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let space = op.space();
    let keep = space.normalize_selection(keep)?;
    let rest = space.complement(&keep);
    let keep_off = space.offsets(&keep);
    let rest_off = space.offsets(&rest);
    let dk = keep_off.len();
    let m = op.matrix();
    let out =
        ComplexMatrix::from_fn(dk, dk, |r, s| rest_off.iter().map(|&t| m[(keep_off[r] + t, keep_off[s] + t)]).sum());
    Ok(DensityOperator::from_parts_unchecked(out, space.sub_space(&keep)?))
}

/// Reduced state of a pure vector on the kept factors, `M M^dagger` with `M`
/// the vector reshaped to (kept, traced).
pub fn reduce_pure(vector: &ComplexVector, space: &TensorSpace, keep: &[usize]) -> Result<DensityOperator> {
    let (m, keep) = reshape_pure(vector, space, keep)?;
    Ok(DensityOperator::from_parts_unchecked(&m * m.adjoint(), space.sub_space(&keep)?))
}

/// Non-zero spectrum of the reduced state on `keep`, computed on whichever
/// side of the cut is smaller. Descending.
pub fn reduced_spectrum_pure(vector: &ComplexVector, space: &TensorSpace, keep: &[usize]) -> Result<Vec<f64>> {
    let (m, _) = reshape_pure(vector, space, keep)?;
    let gram = if m.nrows() <= m.ncols() { &m * m.adjoint() } else { m.adjoint() * &m };
    Ok(eigvalsh(&gram))
}

pub(crate) fn reshape_pure(
    vector: &ComplexVector,
    space: &TensorSpace,
    keep: &[usize],
) -> Result<(ComplexMatrix, Vec<usize>)> {
    if vector.len() != space.total_dim() {
        return Err(Error::DimensionMismatch(vector.len(), space.total_dim()));
    }
    let keep = space.normalize_selection(keep)?;
    let rest = space.complement(&keep);
    let keep_off = space.offsets(&keep);
    let rest_off = space.offsets(&rest);
    let m = ComplexMatrix::from_fn(keep_off.len(), rest_off.len(), |r, t| vector[keep_off[r] + rest_off[t]]);
    Ok((m, keep))
}
