use crate::error::{Error, Result};

/// Ordered tensor factorization. Factor 0 is the most significant digit of
/// the flat index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TensorSpace {
    local_dims: Vec<usize>,
}

impl TensorSpace {
    pub fn new(local_dims: Vec<usize>) -> Result<Self> {
        if local_dims.is_empty() || local_dims.contains(&0) {
            return Err(Error::ZeroDimension);
        }
        Ok(Self { local_dims })
    }

    pub fn uniform(factors: usize, dim: usize) -> Result<Self> {
        Self::new(vec![dim; factors])
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn num_factors(&self) -> usize {
        self.local_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.local_dims.iter().product()
    }

    /// Flat-index stride of each factor.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.local_dims.len()];
        for k in (0..self.local_dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.local_dims[k + 1];
        }
        strides
    }

    /// Sorts and validates a factor selection.
    pub fn normalize_selection(&self, factors: &[usize]) -> Result<Vec<usize>> {
        let mut sel = factors.to_vec();
        sel.sort_unstable();
        sel.dedup();
        if let Some(&bad) = sel.iter().find(|&&k| k >= self.num_factors()) {
            return Err(Error::FactorOutOfRange { index: bad, factors: self.num_factors() });
        }
        Ok(sel)
    }

    pub fn complement(&self, sel: &[usize]) -> Vec<usize> {
        (0..self.num_factors()).filter(|k| !sel.contains(k)).collect()
    }

    pub fn sub_space(&self, sel: &[usize]) -> Result<TensorSpace> {
        if sel.is_empty() {
            return TensorSpace::new(vec![1]);
        }
        TensorSpace::new(sel.iter().map(|&k| self.local_dims[k]).collect())
    }

    /// Flat-index offsets contributed by every multi-index over the selected
    /// factors, enumerated in row-major order of the selection.
    pub fn offsets(&self, sel: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut out = vec![0usize];
        for &k in sel {
            let d = self.local_dims[k];
            let mut next = Vec::with_capacity(out.len() * d);
            for &base in &out {
                for i in 0..d {
                    next.push(base + i * strides[k]);
                }
            }
            out = next;
        }
        out
    }
}
