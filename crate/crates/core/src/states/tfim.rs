use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexVector};

use super::{ChainState, Topology};

/// Largest chain handled.
const MAX_SITES: usize = 14;
/// Above this many sites the default solver switches to Lanczos.
const DENSE_MAX_SITES: usize = 10;
const RESIDUAL_TARGET: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundStateSolver {
    Dense,
    Lanczos,
    /// Dense up to 10 sites, Lanczos above.
    Auto,
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: ChainState,
    pub energy: f64,
    /// `||H psi - E psi||`.
    pub residual: f64,
    pub solver: GroundStateSolver,
}

/// Groundstate of `-sum_i Z_i Z_{i+1} - h sum_i X_i` on a ring of `n` qubits.
pub fn tfim_groundstate(n: usize, h: f64) -> Result<GroundState> {
    tfim_groundstate_with(n, h, GroundStateSolver::Auto)
}

pub fn tfim_groundstate_with(n: usize, h: f64, solver: GroundStateSolver) -> Result<GroundState> {
    if !(2..=MAX_SITES).contains(&n) {
        return Err(Error::OutOfRange(format!("TFIM supports 2..={MAX_SITES} sites, got {n}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::OutOfRange(format!("transverse field must be positive, got {h}")));
    }
    let solver = match solver {
        GroundStateSolver::Auto if n <= DENSE_MAX_SITES => GroundStateSolver::Dense,
        GroundStateSolver::Auto => GroundStateSolver::Lanczos,
        s => s,
    };
    let (energy, mut v) = match solver {
        GroundStateSolver::Dense => dense_ground(n, h)?,
        _ => lanczos_ground(n, h)?,
    };
    // Perron-Frobenius: the groundstate is positive in the Z basis.
    let pivot = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.neg_mut();
    }
    let residual = (tfim_hamiltonian_apply(n, h, &v) - &v * energy).norm();
    if residual > residual_tolerance(energy) {
        return Err(Error::Eigensolver(format!("groundstate residual {residual:.2e}")));
    }
    let amps = ComplexVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)));
    let state = ChainState::normalized(amps, n, 2, Topology::Ring)?;
    Ok(GroundState { state, energy, residual, solver })
}

/// `1e-8`, relative to the energy scale once `|E| > 1`: at huge fields the
/// absolute residual is limited by rounding in `H v` itself.
fn residual_tolerance(energy: f64) -> f64 {
    1e-8 * energy.abs().max(1.0)
}

/// `H v` for the ring Hamiltonian. Site `i` is bit `n - 1 - i` of the index.
pub fn tfim_hamiltonian_apply(n: usize, h: f64, v: &DVector<f64>) -> DVector<f64> {
    let dim = 1usize << n;
    let mut out = DVector::zeros(dim);
    for idx in 0..dim {
        let x = v[idx];
        if x == 0.0 {
            continue;
        }
        out[idx] += diagonal(n, idx) * x;
        for bit in 0..n {
            out[idx ^ (1 << bit)] -= h * x;
        }
    }
    out
}

fn diagonal(n: usize, idx: usize) -> f64 {
    let z = |site: usize| if (idx >> (n - 1 - site)) & 1 == 0 { 1.0 } else { -1.0 };
    -(0..n).map(|i| z(i) * z((i + 1) % n)).sum::<f64>()
}

fn dense_ground(n: usize, h: f64) -> Result<(f64, DVector<f64>)> {
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        m[(idx, idx)] = diagonal(n, idx);
        for bit in 0..n {
            m[(idx ^ (1 << bit), idx)] -= h;
        }
    }
    let eig = SymmetricEigen::new(m);
    let (k, &e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Eigensolver("empty spectrum".into()))?;
    Ok((e, eig.eigenvectors.column(k).into_owned()))
}

/// Restarted Lanczos with full reorthogonalization, started from `|+>^n`
/// (which overlaps the positive groundstate).
fn lanczos_ground(n: usize, h: f64) -> Result<(f64, DVector<f64>)> {
    let dim = 1usize << n;
    let krylov = dim.min(60);
    let mut start = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut best = (f64::INFINITY, start.clone(), f64::INFINITY);
    for _ in 0..200 {
        let mut basis: Vec<DVector<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = tfim_hamiltonian_apply(n, h, &basis[j]);
            alpha.push(basis[j].dot(&w));
            for _ in 0..2 {
                for b in &basis {
                    let proj = b.dot(&w);
                    w.axpy(-proj, b, 1.0);
                }
            }
            let norm = w.norm();
            if j + 1 == krylov || norm < 1e-12 {
                break;
            }
            beta.push(norm);
            basis.push(w / norm);
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
        let mut x = DVector::zeros(dim);
        for (i, b) in basis.iter().enumerate().take(m) {
            x.axpy(eig.eigenvectors[(i, k)], b, 1.0);
        }
        x /= x.norm();
        let residual = (tfim_hamiltonian_apply(n, h, &x) - &x * theta).norm();
        if residual < best.2 {
            best = (theta, x.clone(), residual);
        }
        if residual <= RESIDUAL_TARGET * theta.abs().max(1.0) {
            break;
        }
        start = x;
    }
    if best.2 > residual_tolerance(best.0) {
        return Err(Error::Eigensolver(format!("Lanczos stalled at residual {:.2e}", best.2)));
    }
    Ok((best.0, best.1))
}
