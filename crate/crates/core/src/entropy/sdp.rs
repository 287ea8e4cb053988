//! Conditional min-entropy as a semidefinite program.
//!
//! Primal: minimize `tr Y` subject to `Z = I_A (x) Y - rho_AB >= 0`.
//! Dual:   maximize `tr(rho X)` subject to `X >= 0`, `Tr_A X = I_B`.
//!
//! Solved by a feasible-start primal-dual path-following method with the
//! symmetrized (HKM) search direction. The Newton system is assembled in the
//! matrix-unit basis of `Y` and solved densely. After convergence both points
//! are repaired into exactly feasible certificates, so the reported gap is a
//! true bound on the distance to the optimum.

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, C64};

const MAX_ITERATIONS: usize = 200;
/// Complementarity target before repair.
const INNER_GAP: f64 = 1e-11;
/// Accepted duality gap after repair.
pub const SDP_GAP_TOL: f64 = 1e-8;
const MAX_TOTAL_DIM: usize = 64;

/// Certified solution of the min-entropy SDP.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `tr Y` of a feasible primal point; upper bound on `2^{-H_min}`.
    pub primal_value: f64,
    /// `tr(rho X)` of a feasible dual point; lower bound on `2^{-H_min}`.
    pub dual_value: f64,
    pub gap: f64,
    /// `Y` (positive, on B).
    pub primal_witness: ComplexMatrix,
    /// `X` (positive, on AB, `Tr_A X = I_B`).
    pub dual_witness: ComplexMatrix,
    pub dim_a: usize,
    pub dim_b: usize,
    pub iterations: usize,
}

impl SdpSolution {
    /// `-log2(primal)`: the conservative (lower) end of `H_min(A|B)`.
    pub fn hmin(&self) -> f64 {
        -self.primal_value.log2()
    }

    /// `-log2(dual)`: the upper end of `H_min(A|B)`.
    pub fn hmin_upper(&self) -> f64 {
        -self.dual_value.log2()
    }

    /// Recomputes feasibility residuals of both witnesses against `rho`
    /// (factors ordered A then B): `(min eig of I (x) Y - rho, min eig of X,
    /// ||Tr_A X - I||)`.
    pub fn residuals(&self, rho: &ComplexMatrix) -> (f64, f64, f64) {
        let z = linalg::kron(&linalg::identity(self.dim_a), &self.primal_witness) - rho;
        let zmin = linalg::eigvalsh(&z).last().copied().unwrap_or(0.0);
        let xmin = linalg::eigvalsh(&self.dual_witness).last().copied().unwrap_or(0.0);
        let t = trace_a(&self.dual_witness, self.dim_a, self.dim_b);
        (zmin, xmin, linalg::identity_residual(&t))
    }
}

/// Solves the SDP for `rho` with A = `a_factors`, B = the remaining factors.
pub fn hmin_conditional(rho: &DensityOperator, a_factors: &[usize]) -> Result<SdpSolution> {
    rho.require_normalized()?;
    let space = rho.space();
    let a = space.normalize_selection(a_factors)?;
    let b = space.complement(&a);
    let mut perm = a.clone();
    perm.extend_from_slice(&b);
    let ordered = rho.permute(&perm)?;
    let dim_a: usize = a.iter().map(|&k| space.local_dims()[k]).product();
    let dim_b = rho.dim() / dim_a;
    solve(ordered.matrix(), dim_a, dim_b)
}

/// Solves the SDP for an operator already ordered as A (x) B.
pub fn solve(rho: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<SdpSolution> {
    let n = dim_a * dim_b;
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if rho.nrows() != n {
        return Err(Error::DimensionMismatch(rho.nrows(), n));
    }
    if n > MAX_TOTAL_DIM {
        return Err(Error::DimensionBudget(format!("|A||B| = {n} exceeds {MAX_TOTAL_DIM}")));
    }
    if dim_b == 1 {
        return Ok(trivial_b(rho, dim_a));
    }
    if dim_a == 1 {
        return Ok(trivial_a(rho, dim_b));
    }
    interior_point(rho, dim_a, dim_b)
}

/// `Tr_A` of an operator on A (x) B.
pub fn trace_a(x: &ComplexMatrix, dim_a: usize, dim_b: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_b, dim_b, |r, s| (0..dim_a).map(|a| x[(a * dim_b + r, a * dim_b + s)]).sum())
}

fn lift(y: &ComplexMatrix, dim_a: usize) -> ComplexMatrix {
    linalg::kron(&linalg::identity(dim_a), y)
}

/// Trivial B: `Y = lambda_max`, `X` = top eigenprojector.
fn trivial_b(rho: &ComplexMatrix, dim_a: usize) -> SdpSolution {
    let eig = linalg::eigh(rho);
    let x = eig.top_projector(1);
    let primal = eig.values[0];
    let dual = linalg::trace(&(rho * &x)).re;
    SdpSolution {
        primal_value: primal,
        dual_value: dual,
        gap: (primal - dual).abs(),
        primal_witness: ComplexMatrix::from_element(1, 1, c(primal, 0.0)),
        dual_witness: x,
        dim_a,
        dim_b: 1,
        iterations: 0,
    }
}

/// Trivial A: the constraint forces `X = I`, and `Y = rho` is feasible.
fn trivial_a(rho: &ComplexMatrix, dim_b: usize) -> SdpSolution {
    let t = linalg::trace(rho).re;
    SdpSolution {
        primal_value: t,
        dual_value: t,
        gap: 0.0,
        primal_witness: linalg::hermitize(rho),
        dual_witness: linalg::identity(dim_b),
        dim_a: 1,
        dim_b,
        iterations: 0,
    }
}

fn interior_point(rho: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<SdpSolution> {
    let n = dim_a * dim_b;
    let rho = linalg::hermitize(rho);
    let lambda_max = linalg::eigvalsh(&rho)[0];
    let mut y = linalg::identity(dim_b) * c(lambda_max + 1.0, 0.0);
    let mut x = linalg::identity(n) * c(1.0 / dim_a as f64, 0.0);
    let mut iterations = 0;
    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let z = lift(&y, dim_a) - &rho;
        let gap = linalg::trace(&(&z * &x)).re;
        if gap <= INNER_GAP {
            break;
        }
        let w = invert_pd(&z)?;
        let mu = 0.1 * gap / n as f64;
        let rhs = trace_a(&w, dim_a, dim_b) * c(mu, 0.0) - linalg::identity(dim_b);
        let dy = solve_newton(&w, &x, &rhs, dim_a, dim_b)?;
        let dz = lift(&dy, dim_a);
        let wdzx = &w * &dz * &x;
        let dx = linalg::hermitize(&(&w * c(mu, 0.0) - &x - (&wdzx + wdzx.adjoint()) * c(0.5, 0.0)));
        let alpha = 0.95 * max_step(&x, &dx).min(max_step(&z, &dz)).min(1.0 / 0.95);
        y += &dy * c(alpha, 0.0);
        x += &dx * c(alpha, 0.0);
        y = linalg::hermitize(&y);
        x = linalg::hermitize(&x);
        // keep the equality constraint exact against drift
        x = renormalize_dual(&x, dim_a, dim_b)?;
    }
    let (y, x) = (repair_primal(&y, &rho, dim_a), repair_dual(&x, dim_a, dim_b)?);
    let primal = linalg::trace(&y).re;
    let dual = linalg::trace(&(&rho * &x)).re;
    let gap = primal - dual;
    if !(gap.abs() <= SDP_GAP_TOL) {
        return Err(Error::SdpNotConverged { iterations, gap });
    }
    Ok(SdpSolution {
        primal_value: primal,
        dual_value: dual,
        gap: gap.abs(),
        primal_witness: y,
        dual_witness: x,
        dim_a,
        dim_b,
        iterations,
    })
}

/// Assembles `L(dY) = 1/2 Tr_A[W (I (x) dY) X + X (I (x) dY) W]` on matrix
/// units and solves `L(dY) = rhs`.
fn solve_newton(
    w: &ComplexMatrix,
    x: &ComplexMatrix,
    rhs: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
) -> Result<ComplexMatrix> {
    let m = dim_b * dim_b;
    let mut g = ComplexMatrix::zeros(m, m);
    for a in 0..dim_a {
        for a2 in 0..dim_a {
            for r in 0..dim_b {
                for p in 0..dim_b {
                    let wv = w[(a2 * dim_b + r, a * dim_b + p)];
                    let xv = x[(a2 * dim_b + r, a * dim_b + p)];
                    for q in 0..dim_b {
                        for s in 0..dim_b {
                            let term =
                                wv * x[(a * dim_b + q, a2 * dim_b + s)] + xv * w[(a * dim_b + q, a2 * dim_b + s)];
                            g[(r * dim_b + s, p * dim_b + q)] += term * c(0.5, 0.0);
                        }
                    }
                }
            }
        }
    }
    let b = nalgebra::DVector::<C64>::from_fn(m, |k, _| rhs[(k / dim_b, k % dim_b)]);
    // the operator is Hermitian positive definite: <D, W D X> = ||X^1/2 D W^1/2||^2
    let sol = match g.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => g.lu().solve(&b).ok_or_else(|| Error::Eigensolver("singular Newton system".into()))?,
    };
    Ok(linalg::hermitize(&ComplexMatrix::from_fn(dim_b, dim_b, |p, q| sol[p * dim_b + q])))
}

fn invert_pd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = linalg::eigh(m);
    if eig.values.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::Eigensolver("iterate left the positive cone".into()));
    }
    Ok(eig.map(|v| 1.0 / v))
}

/// Largest `t` with `m + t dm >= 0`, for positive definite `m`.
fn max_step(m: &ComplexMatrix, dm: &ComplexMatrix) -> f64 {
    let eig = linalg::eigh(m);
    let inv_sqrt = eig.map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    let scaled = linalg::hermitize(&(&inv_sqrt * dm * &inv_sqrt));
    let min = linalg::eigvalsh(&scaled).last().copied().unwrap_or(0.0);
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn renormalize_dual(x: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let t = trace_a(x, dim_a, dim_b);
    let eig = linalg::eigh(&linalg::hermitize(&t));
    if eig.values.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::Eigensolver("dual iterate lost its partial-trace constraint".into()));
    }
    let s = lift(&eig.map(|v| 1.0 / v.sqrt()), dim_a);
    Ok(linalg::hermitize(&(&s * x * &s)))
}

/// Shifts `Y` by the most negative eigenvalue of `I (x) Y - rho`.
fn repair_primal(y: &ComplexMatrix, rho: &ComplexMatrix, dim_a: usize) -> ComplexMatrix {
    let z = lift(y, dim_a) - rho;
    let min = linalg::eigvalsh(&z).last().copied().unwrap_or(0.0);
    // a little headroom so the re-check is not defeated by rounding
    let shift = if min < 0.0 { -min * (1.0 + 1e-9) + 1e-15 } else { 0.0 };
    linalg::hermitize(&(y + linalg::identity(y.nrows()) * c(shift, 0.0)))
}

/// Clamps `X` to the positive cone, then restores `Tr_A X = I` by congruence.
fn repair_dual(x: &ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<ComplexMatrix> {
    let clamped = linalg::eigh(x).map(|v| v.max(0.0));
    renormalize_dual(&clamped, dim_a, dim_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, ComplexVector, ZERO};
    use crate::rng::RngSeed;
    use crate::space::TensorSpace;

    fn max_entangled(d: usize) -> ComplexMatrix {
        let mut v = ComplexVector::from_element(d * d, ZERO);
        for k in 0..d {
            v[k * d + k] = c(1.0 / (d as f64).sqrt(), 0.0);
        }
        linalg::outer(&v)
    }

    fn check(sol: &SdpSolution, rho: &ComplexMatrix) {
        assert!(sol.gap <= SDP_GAP_TOL, "gap {}", sol.gap);
        let (z, x, t) = sol.residuals(rho);
        assert!(z >= -1e-9 && x >= -1e-9 && t <= 1e-9, "{z} {x} {t}");
    }

    #[test]
    fn maximally_entangled() {
        for d in [2usize, 3, 4] {
            let rho = max_entangled(d);
            let sol = solve(&rho, d, d).unwrap();
            check(&sol, &rho);
            assert!((sol.hmin() + (d as f64).log2()).abs() < 1e-6, "d={d}: {}", sol.hmin());
        }
    }

    #[test]
    fn product_states() {
        let mut rng = RngSeed::new(21).rng();
        for (da, db) in [(2usize, 2usize), (2, 4), (4, 2), (3, 3)] {
            let ra = random_density(da, da, &mut rng);
            let rb = random_density(db, 2.min(db), &mut rng);
            let rho = linalg::kron(&ra, &rb);
            let sol = solve(&rho, da, db).unwrap();
            check(&sol, &rho);
            let want = -linalg::eigvalsh(&ra)[0].log2();
            assert!((sol.hmin() - want).abs() < 1e-6);
        }
        // qubit maximally mixed A: exactly one bit
        let rho = linalg::kron(&(linalg::identity(2) * c(0.5, 0.0)), &random_density(3, 3, &mut rng));
        assert!((solve(&rho, 2, 3).unwrap().hmin() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trivial_systems() {
        let mut rng = RngSeed::new(3).rng();
        let rho = random_density(4, 4, &mut rng);
        let sol = solve(&rho, 4, 1).unwrap();
        assert!((sol.hmin() + linalg::eigvalsh(&rho)[0].log2()).abs() < 1e-12);
        let sol = solve(&rho, 1, 4).unwrap();
        assert!(sol.hmin().abs() < 1e-12);
    }

    #[test]
    fn random_instances_certify() {
        let mut rng = RngSeed::new(77).rng();
        for (da, db, rank) in
            [(2usize, 2usize, 1usize), (2, 2, 4), (4, 4, 3), (2, 8, 16), (8, 2, 1), (4, 8, 32), (4, 16, 5)]
        {
            let rho = random_density(da * db, rank, &mut rng);
            let sol = solve(&rho, da, db).unwrap();
            check(&sol, &rho);
            let h = sol.hmin();
            assert!(h >= -(da.min(db) as f64).log2() - 1e-6 && h <= (da as f64).log2() + 1e-6);
        }
    }

    #[test]
    fn factor_selection() {
        let mut rng = RngSeed::new(5).rng();
        let ra = random_density(2, 2, &mut rng);
        let rb = random_density(3, 3, &mut rng);
        // A is the second factor here
        let rho = DensityOperator::new(linalg::kron(&rb, &ra), TensorSpace::new(vec![3, 2]).unwrap()).unwrap();
        let sol = hmin_conditional(&rho, &[1]).unwrap();
        assert!((sol.hmin() + linalg::eigvalsh(&ra)[0].log2()).abs() < 1e-6);
    }

    #[test]
    fn budget_enforced() {
        let rho = linalg::identity(128) * c(1.0 / 128.0, 0.0);
        assert!(matches!(solve(&rho, 2, 64), Err(Error::DimensionBudget(_))));
    }
}
