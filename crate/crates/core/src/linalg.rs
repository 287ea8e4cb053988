//! Dense complex linear algebra shared by every other module.
//!
//! Hermitian spectra are always returned in descending order. Eigenvalues at
//! or below [`RANK_TOL`] times the largest one count as zero wherever a rank
//! or support decision is made.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Relative eigenvalue floor used for every rank and positivity decision.
pub const RANK_TOL: f64 = 1e-10;

pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Absolute threshold below which eigenvalues are treated as zero.
    pub fn floor(&self) -> f64 {
        RANK_TOL * self.values.first().copied().unwrap_or(0.0).max(0.0)
    }

    pub fn rank(&self) -> usize {
        let floor = self.floor();
        self.values.iter().filter(|&&v| v > floor && v > 0.0).count()
    }

    /// Rebuilds `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.nrows();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let w = f(v);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Projector onto the span of the first `k` eigenvectors.
    pub fn top_projector(&self, k: usize) -> ComplexMatrix {
        let cols = self.vectors.columns(0, k);
        cols * cols.adjoint()
    }
}

pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// nalgebra's Hermitian eigensolver can return NaN on exactly low-rank
/// structured input (e.g. the 64-dim maximally entangled projector), so the
/// result is checked and recomputed by cyclic Jacobi when it is off.
pub fn eigh(m: &ComplexMatrix) -> HermitianEigen {
    let h = hermitize(m);
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let out = sorted_eigen(eig.eigenvalues.as_slice(), &eig.eigenvectors);
    let tol = 1e-12 * (1.0 + h.norm()) * n.max(1) as f64;
    let finite = out.values.iter().all(|v| v.is_finite());
    if finite
        && identity_residual(&(out.vectors.adjoint() * &out.vectors)) <= tol * 1e2
        && (out.map(|v| v) - &h).norm() <= tol
    {
        return out;
    }
    jacobi_eigh(&h)
}

/// Eigenvalues only; the fast path is accepted when its first two moments
/// match the trace and Frobenius norm.
pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    let h = hermitize(m);
    let n = h.nrows();
    let mut v: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    let tol = 1e-12 * (1.0 + h.norm()) * n.max(1) as f64;
    let trace: f64 = (0..n).map(|i| h[(i, i)].re).sum();
    let frob = h.norm_squared();
    let ok = v.iter().all(|x| x.is_finite())
        && (v.iter().sum::<f64>() - trace).abs() <= tol
        && (v.iter().map(|x| x * x).sum::<f64>() - frob).abs() <= tol * (1.0 + h.norm());
    if !ok {
        return eigh(&h).values;
    }
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn sorted_eigen(values: &[f64], vectors: &ComplexMatrix) -> HermitianEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    HermitianEigen {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: ComplexMatrix::from_fn(vectors.nrows(), n, |i, j| vectors[(i, order[j])]),
    }
}

/// Cyclic complex Jacobi: each rotation first rephases `a_pq` to be real,
/// then applies the real symmetric Jacobi rotation.
fn jacobi_eigh(h: &ComplexMatrix) -> HermitianEigen {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = identity(n);
    let scale = h.norm();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum();
        if off.sqrt() <= f64::EPSILON * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == 0.0 || r <= f64::EPSILON * 1e-3 * scale {
                    continue;
                }
                let phase = (apq / r).conj();
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt()) };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G restricted to (p, q): [[c, s], [-s·phase, c·phase]]
                let (gpp, gpq, gqp, gqq) = (c(cs, 0.0), c(sn, 0.0), phase * -sn, phase * cs);
                for mat in [&mut a, &mut v] {
                    for k in 0..n {
                        let (xp, xq) = (mat[(k, p)], mat[(k, q)]);
                        mat[(k, p)] = xp * gpp + xq * gqp;
                        mat[(k, q)] = xp * gpq + xq * gqq;
                    }
                }
                for k in 0..n {
                    let (xp, xq) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = gpp.conj() * xp + gqp.conj() * xq;
                    a[(q, k)] = gpq.conj() * xp + gqq.conj() * xq;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    sorted_eigen(&values, &v)
}

/// Eigenvalues of a general square matrix via complex Schur form.
pub fn eigenvalues_general(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigensolver("Schur iteration did not converge".into()))?;
    let vals = schur.eigenvalues().ok_or_else(|| Error::Eigensolver("Schur form is not triangular".into()))?;
    Ok(vals.iter().copied().collect())
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    svd(m).values
}

/// Thin decomposition `m = U diag(values) V^dagger`, values descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

/// nalgebra's bidiagonal SVD occasionally returns inconsistent factors for
/// exactly rank-deficient complex input, so its result is verified and
/// recomputed by one-sided Jacobi when the reconstruction is off.
pub fn svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: ComplexMatrix::zeros(rows, 0), values: Vec::new(), v: ComplexMatrix::zeros(cols, 0) };
    }
    let fast = m.clone().svd(true, true);
    let (u, v_t) = (fast.u.expect("requested U"), fast.v_t.expect("requested V^dagger"));
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fast.singular_values[b].total_cmp(&fast.singular_values[a]));
    let out = Svd {
        u: ComplexMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        values: order.iter().map(|&j| fast.singular_values[j]).collect(),
        v: ComplexMatrix::from_fn(cols, k, |i, j| v_t[(order[j], i)].conj()),
    };
    let tol = 1e-12 * (1.0 + m.norm()) * k as f64;
    let orthonormal = identity_residual(&(out.u.adjoint() * &out.u)) <= tol * 1e2
        && identity_residual(&(out.v.adjoint() * &out.v)) <= tol * 1e2;
    if orthonormal && (out.reconstruct() - m).norm() <= tol {
        return out;
    }
    jacobi_svd(m)
}

/// One-sided (Hestenes) Jacobi SVD.
fn jacobi_svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    if rows < cols {
        let t = jacobi_svd(&m.adjoint());
        return Svd { u: t.v, values: t.values, v: t.u };
    }
    let mut a = m.clone();
    let mut v = identity(cols);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase;
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let floor = norms[order[0]] * f64::EPSILON * cols as f64;
    let mut u = ComplexMatrix::zeros(rows, cols);
    let mut filled = 0;
    for (j, &src) in order.iter().enumerate() {
        if norms[src] > floor && norms[src] > 0.0 {
            u.set_column(j, &(a.column(src) / c(norms[src], 0.0)));
            filled = j + 1;
        }
    }
    // complete the null directions with an orthonormal basis of the complement
    let mut basis = 0;
    for j in filled..cols {
        loop {
            let mut e = ComplexVector::zeros(rows);
            e[basis] = ONE;
            basis += 1;
            for i in 0..j {
                let proj = u.column(i).dotc(&e);
                e -= u.column(i) * proj;
            }
            let nrm = e.norm();
            if nrm > 1e-8 {
                u.set_column(j, &(e / c(nrm, 0.0)));
                break;
            }
        }
    }
    Svd {
        u,
        values: order.iter().map(|&j| if j < cols && norms[j] > floor { norms[j] } else { 0.0 }).collect(),
        v: ComplexMatrix::from_fn(cols, cols, |i, j| v[(i, order[j])]),
    }
}

/// Trace, operator and Frobenius norms from the singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchattenNorms {
    pub trace: f64,
    pub operator: f64,
    pub frobenius: f64,
}

pub fn schatten_norms(m: &ComplexMatrix) -> SchattenNorms {
    let s = singular_values(m);
    SchattenNorms {
        trace: s.iter().sum(),
        operator: s.first().copied().unwrap_or(0.0),
        frobenius: s.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if hermiticity_residual(m) <= 1e-12 * (1.0 + m.norm()) {
        eigvalsh(m).iter().map(|v| v.abs()).sum()
    } else {
        singular_values(m).iter().sum()
    }
}

pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `sign(H)`: +1 on the non-negative eigenspace, -1 on the negative one.
/// `tr(sign(H) H) = ||H||_1`.
pub fn hermitian_sign(m: &ComplexMatrix) -> ComplexMatrix {
    eigh(m).map(|v| if v < 0.0 { -1.0 } else { 1.0 })
}

/// Unitary `W` maximizing `Re tr(W K)`, i.e. `V U^dagger` for `K = U S V^dagger`.
pub fn conjugate_polar_factor(k: &ComplexMatrix) -> ComplexMatrix {
    let s = svd(k);
    &s.v * s.u.adjoint()
}

pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    eigh(m).map(|v| v.max(0.0).sqrt())
}

/// `M^{-1/2}` restricted to the support of a positive semidefinite `M`.
pub fn inv_sqrt_on_support(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = eigh(m);
    let floor = eig.floor();
    eig.map(|v| if v > floor && v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
}

pub fn support_projector(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = eigh(m);
    let floor = eig.floor();
    eig.map(|v| if v > floor && v > 0.0 { 1.0 } else { 0.0 })
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.trace()
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

/// `||A - I||_F`.
pub fn identity_residual(m: &ComplexMatrix) -> f64 {
    (m - identity(m.nrows())).norm()
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    c(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Haar-distributed unitary: Ginibre matrix, QR, and the phase fix that
/// makes the triangular factor's diagonal positive real.
pub fn haar_unitary(dim: usize, seed: RngSeed) -> Result<ComplexMatrix> {
    haar_unitary_with(dim, &mut seed.rng())
}

pub fn haar_unitary_with<R: Rng>(dim: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let z = ginibre(dim, dim, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Haar-random unit vector.
pub fn haar_state(dim: usize, seed: RngSeed) -> Result<ComplexVector> {
    haar_state_with(dim, &mut seed.rng())
}

pub fn haar_state_with<R: Rng>(dim: usize, rng: &mut R) -> Result<ComplexVector> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    loop {
        let v = ComplexVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let n = v.norm();
        if n > 0.0 {
            return Ok(v / c(n, 0.0));
        }
    }
}

/// Random density matrix `G G^dagger / tr` with a Ginibre `G` of the given
/// rank (Hilbert-Schmidt measure for full rank).
pub fn random_density<R: Rng>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m / c(t, 0.0)
}
