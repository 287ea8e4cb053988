//! Decoupling by Haar-random states and by random rank-`L` projective measurements.

use rayon::prelude::*;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, ComplexVector};
use crate::metrics::purified_distance;
use crate::rng::RngSeed;
use crate::states::PureState;

/// Largest `dim_A * dim_B` sampled by the Haar experiment.
pub const HAAR_DECOUPLING_BUDGET: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct DecouplingReport {
    /// `D(rho_B, tau_B)` per sample.
    pub distances: Vec<f64>,
    pub mean: f64,
    /// `(2 |B| / |A|)^(1/4)`.
    pub bound: f64,
    pub holds: bool,
}

/// Samples Haar states on `A (x) B` and measures how far `rho_B` is from
/// maximally mixed.
pub fn haar_decoupling_experiment(
    dim_a: usize,
    dim_b: usize,
    samples: usize,
    seed: RngSeed,
) -> Result<DecouplingReport> {
    if dim_a == 0 || dim_b == 0 {
        return Err(Error::ZeroDimension);
    }
    if dim_a < dim_b {
        return Err(Error::OutOfRange(format!("need dim_A >= dim_B, got {dim_a} < {dim_b}")));
    }
    if dim_a * dim_b > HAAR_DECOUPLING_BUDGET {
        return Err(Error::DimensionBudget(format!("{dim_a} x {dim_b} exceeds {HAAR_DECOUPLING_BUDGET}")));
    }
    let tau = DensityOperator::single(linalg::identity(dim_b) * c(1.0 / dim_b as f64, 0.0))?;
    let distances = (0..samples)
        .into_par_iter()
        .map(|s| {
            let psi = linalg::haar_state(dim_a * dim_b, seed.stream(s as u64))?;
            let m = ComplexMatrix::from_fn(dim_a, dim_b, |a, b| psi[a * dim_b + b]);
            let rho_b = m.transpose() * m.map(|z| z.conj());
            purified_distance(&DensityOperator::single(rho_b)?, &tau)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = if samples == 0 { 0.0 } else { distances.iter().sum::<f64>() / samples as f64 };
    let bound = (2.0 * dim_b as f64 / dim_a as f64).powf(0.25);
    Ok(DecouplingReport { distances, mean, bound, holds: mean <= bound })
}

/// `floor(|A| / L)` rank-`L` projectors plus a remainder, from a Haar rotation
/// of the coordinate partition.
#[derive(Debug, Clone)]
pub struct PovmFamily {
    pub elements: Vec<ComplexMatrix>,
    /// Isometries onto each element's range, `P_k = V_k V_k^dagger`.
    pub isometries: Vec<ComplexMatrix>,
    pub ranks: Vec<usize>,
    /// `||sum_k P_k - I||_F`.
    pub completeness_residual: f64,
}

impl PovmFamily {
    /// Largest `||P_j P_k||_F` over distinct pairs.
    pub fn orthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, p) in self.elements.iter().enumerate() {
            for q in &self.elements[j + 1..] {
                worst = worst.max((p * q).norm());
            }
        }
        worst
    }
}

pub fn random_rank_povm(dim_a: usize, l: usize, seed: RngSeed) -> Result<PovmFamily> {
    if l == 0 || l > dim_a {
        return Err(Error::OutOfRange(format!("rank {l} outside 1..={dim_a}")));
    }
    let u = linalg::haar_unitary(dim_a, seed)?;
    let full = dim_a / l;
    let mut ranks = vec![l; full];
    if dim_a > full * l {
        ranks.push(dim_a - full * l);
    }
    let mut start = 0;
    let mut isometries = Vec::with_capacity(ranks.len());
    let mut elements = Vec::with_capacity(ranks.len());
    for &r in &ranks {
        let v = u.columns(start, r).into_owned();
        elements.push(&v * v.adjoint());
        isometries.push(v);
        start += r;
    }
    let sum = elements.iter().fold(ComplexMatrix::zeros(dim_a, dim_a), |acc, p| acc + p);
    let completeness_residual = linalg::identity_residual(&sum);
    Ok(PovmFamily { elements, isometries, ranks, completeness_residual })
}

#[derive(Debug, Clone)]
pub struct PovmDecouplingReport {
    /// `sum_k p_k ||rho^k_{A'B} - tau_{A'} (x) rho_B||_1` per sampled family.
    pub errors: Vec<f64>,
    pub best: f64,
    /// `2 sqrt(L |B| tr rho_AB^2) + 2 L / |A|`.
    pub bound: f64,
    pub holds: bool,
}

/// Largest factor dimensions `(A, B, C)` accepted by the POVM experiment.
pub const POVM_DIMS: (usize, usize, usize) = (16, 4, 16);

fn tripartite_dims(psi: &PureState) -> Result<(usize, usize, usize)> {
    let dims = psi.space().local_dims();
    if dims.len() != 3 {
        return Err(Error::InvalidState(format!("expected a tripartite state, got {} factors", dims.len())));
    }
    Ok((dims[0], dims[1], dims[2]))
}

/// Average decoupling error of the post-measurement states, for one sampled
/// rank-`L` family.
pub fn povm_decoupling_error(psi: &PureState, family: &PovmFamily) -> Result<f64> {
    let (_, db, _) = tripartite_dims(psi)?;
    let rho_ab = psi.reduced(&[0, 1])?;
    let rho_b = psi.reduced(&[1])?;
    let mut total = 0.0;
    for v in &family.isometries {
        let r = v.ncols();
        let w = linalg::kron(v, &linalg::identity(db));
        let sigma = w.adjoint() * rho_ab.matrix() * &w;
        let p = linalg::trace(&sigma).re;
        // outcomes that never occur carry zero weight
        if p <= 1e-14 {
            continue;
        }
        let target = linalg::kron(&(linalg::identity(r) * c(1.0 / r as f64, 0.0)), rho_b.matrix());
        total += p * linalg::trace_norm(&linalg::hermitize(&(sigma / c(p, 0.0) - target)));
    }
    Ok(total)
}

pub fn decoupling_merging_experiment(
    psi: &PureState,
    l: usize,
    povm_samples: usize,
    seed: RngSeed,
) -> Result<PovmDecouplingReport> {
    let (da, db, dc) = tripartite_dims(psi)?;
    if da > POVM_DIMS.0 || db > POVM_DIMS.1 || dc > POVM_DIMS.2 {
        return Err(Error::DimensionBudget(format!("dims ({da}, {db}, {dc}) exceed {POVM_DIMS:?}")));
    }
    if povm_samples == 0 {
        return Err(Error::OutOfRange("need at least one POVM sample".into()));
    }
    let purity = psi.reduced(&[0, 1])?.purity();
    let bound = 2.0 * (l as f64 * db as f64 * purity).sqrt() + 2.0 * l as f64 / da as f64;
    let errors = (0..povm_samples)
        .into_par_iter()
        .map(|k| povm_decoupling_error(psi, &random_rank_povm(da, l, seed.stream(k as u64))?))
        .collect::<Result<Vec<f64>>>()?;
    let best = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PovmDecouplingReport { errors, best, bound, holds: best <= bound + 1e-9 })
}

/// Haar-random pure state on three factors.
pub fn haar_tripartite(dims: (usize, usize, usize), seed: RngSeed) -> Result<PureState> {
    PureState::haar(crate::space::TensorSpace::new(vec![dims.0, dims.1, dims.2])?, seed)
}

/// `|Phi>_{AC} (x) |0>_B` with `|A| = |C| = d` and the given `|B|`.
pub fn max_entangled_ac(d: usize, dim_b: usize) -> Result<PureState> {
    let mut v = ComplexVector::zeros(d * dim_b * d);
    for k in 0..d {
        v[k * dim_b * d + k] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    PureState::new(v, crate::space::TensorSpace::new(vec![d, dim_b, d])?)
}
