//! The correlation function `Cor(X:Y) = max |tr((M (x) N)(rho_XY - rho_X (x) rho_Y))|`
//! over operators of norm at most one, reported as a certified interval;
//! transfer-operator spectra; and exponential-decay certification.

mod edc;
mod lowrank;
mod transfer;

pub use edc::{
    correlation_length_fit, decay_fit, decay_scan, edc_certify, envelope, DecayCertificate, DecayFit, DecaySample,
    EdcOptions, Verdict, Violation,
};
pub use lowrank::{delta_upper, delta_upper_pure, pure_factor};
pub use transfer::{mps_correlation_bound, transfer_operator, TransferSpectrum};

use rayon::prelude::*;

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, ZERO};
use crate::rng::RngSeed;

/// Largest dimension allowed on either side of the cut.
pub const MAX_SIDE_DIM: usize = 64;

#[derive(Debug, Clone, Copy)]
pub struct CorOptions {
    /// Random starting points for the alternating maximization.
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop once an iteration improves the value by less than this.
    pub tol: f64,
    pub seed: RngSeed,
}

impl Default for CorOptions {
    fn default() -> Self {
        Self { restarts: 16, max_iterations: 500, tol: 1e-10, seed: RngSeed::new(0) }
    }
}

/// Where the best lower-bound witness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessSource {
    Alternating,
    DataHiding,
}

/// `lower <= Cor(X:Y) <= upper`, with `lower` realized by `witness_m (x) witness_n`.
#[derive(Debug, Clone)]
pub struct CorrelationEstimate {
    pub lower: f64,
    /// `||rho_XY - rho_X (x) rho_Y||_1`.
    pub upper: f64,
    pub witness_m: ComplexMatrix,
    pub witness_n: ComplexMatrix,
    pub source: WitnessSource,
    pub restarts: usize,
    /// Whether the restart that produced the best alternating value met the
    /// tolerance before the iteration cap.
    pub converged: bool,
    pub dim_x: usize,
    pub dim_y: usize,
}

impl CorrelationEstimate {
    /// Re-evaluates the stored witness against a difference operator.
    pub fn reevaluate(&self, delta: &ComplexMatrix) -> f64 {
        witness_value(delta, &self.witness_m, &self.witness_n, self.dim_x, self.dim_y)
    }
}

/// A product observable `x (x) y` with both factors of norm at most one.
#[derive(Debug, Clone)]
pub struct ProductWitness {
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub value: f64,
}

/// `rho_XY - rho_X (x) rho_Y` for an operator ordered X (x) Y.
pub fn delta_operator(rho_xy: &ComplexMatrix, dim_x: usize, dim_y: usize) -> ComplexMatrix {
    let rho_x =
        ComplexMatrix::from_fn(dim_x, dim_x, |a, b| (0..dim_y).map(|y| rho_xy[(a * dim_y + y, b * dim_y + y)]).sum());
    let rho_y =
        ComplexMatrix::from_fn(dim_y, dim_y, |a, b| (0..dim_x).map(|x| rho_xy[(x * dim_y + a, x * dim_y + b)]).sum());
    rho_xy - linalg::kron(&rho_x, &rho_y)
}

/// `|tr((M (x) N) delta)|`.
pub fn witness_value(delta: &ComplexMatrix, m: &ComplexMatrix, n: &ComplexMatrix, dim_x: usize, dim_y: usize) -> f64 {
    let mut acc = ZERO;
    for x in 0..dim_x {
        for x2 in 0..dim_x {
            let mv = m[(x, x2)];
            if mv == ZERO {
                continue;
            }
            for y in 0..dim_y {
                for y2 in 0..dim_y {
                    acc += mv * n[(y, y2)] * delta[(x2 * dim_y + y2, x * dim_y + y)];
                }
            }
        }
    }
    acc.norm()
}

/// `K` with `tr((M (x) N) delta) = tr(M K)`.
fn reduce_with_n(delta: &ComplexMatrix, n: &ComplexMatrix, dim_x: usize, dim_y: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_x, dim_x, |a, b| {
        let mut acc = ZERO;
        for y in 0..dim_y {
            for y2 in 0..dim_y {
                acc += n[(y, y2)] * delta[(a * dim_y + y2, b * dim_y + y)];
            }
        }
        acc
    })
}

/// `L` with `tr((M (x) N) delta) = tr(N L)`.
fn reduce_with_m(delta: &ComplexMatrix, m: &ComplexMatrix, dim_x: usize, dim_y: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_y, dim_y, |a, b| {
        let mut acc = ZERO;
        for x in 0..dim_x {
            for x2 in 0..dim_x {
                acc += m[(x, x2)] * delta[(x2 * dim_y + a, x * dim_y + b)];
            }
        }
        acc
    })
}

/// Product witnesses from the optimal trace-norm observable `sign(delta)`,
/// block-decomposed over the smaller factor: `sign(delta) = sum_ab |a><b| (x) M_ab`.
/// The best of the `d_min^2` pairs reaches at least `||delta||_1 / d_min^2`.
pub fn datahiding_witness(delta: &ComplexMatrix, dim_x: usize, dim_y: usize) -> Vec<ProductWitness> {
    let sign = linalg::hermitian_sign(&linalg::hermitize(delta));
    let mut out = Vec::new();
    if dim_x <= dim_y {
        for a in 0..dim_x {
            for b in 0..dim_x {
                let mut x = ComplexMatrix::zeros(dim_x, dim_x);
                x[(a, b)] = c(1.0, 0.0);
                let y = ComplexMatrix::from_fn(dim_y, dim_y, |r, s| sign[(a * dim_y + r, b * dim_y + s)]);
                let value = witness_value(delta, &x, &y, dim_x, dim_y);
                out.push(ProductWitness { x, y, value });
            }
        }
    } else {
        for a in 0..dim_y {
            for b in 0..dim_y {
                let mut y = ComplexMatrix::zeros(dim_y, dim_y);
                y[(a, b)] = c(1.0, 0.0);
                let x = ComplexMatrix::from_fn(dim_x, dim_x, |r, s| sign[(r * dim_y + a, s * dim_y + b)]);
                let value = witness_value(delta, &x, &y, dim_x, dim_y);
                out.push(ProductWitness { x, y, value });
            }
        }
    }
    out
}

struct Run {
    value: f64,
    m: ComplexMatrix,
    n: ComplexMatrix,
    converged: bool,
}

/// Alternating polar-factor updates from a starting `N`. The value never
/// decreases; a decrease beyond rounding is a bug and panics.
fn alternate(delta: &ComplexMatrix, n0: ComplexMatrix, dim_x: usize, dim_y: usize, opts: &CorOptions) -> Run {
    let mut n = n0;
    let mut m = ComplexMatrix::identity(dim_x, dim_x);
    let mut value = f64::NEG_INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let k = reduce_with_n(delta, &n, dim_x, dim_y);
        m = linalg::conjugate_polar_factor(&k);
        let after_m = linalg::trace_norm(&k);
        let l = reduce_with_m(delta, &m, dim_x, dim_y);
        n = linalg::conjugate_polar_factor(&l);
        let after_n = linalg::trace_norm(&l);
        let slack = 1e-12 * value.abs().max(1.0);
        assert!(
            after_m >= value - slack && after_n >= after_m - slack,
            "alternating maximization decreased: {value} -> {after_m} -> {after_n}"
        );
        let gain = after_n - value;
        value = after_n;
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Run { value, m, n, converged }
}

/// Certified interval for `Cor(X:Y)`; X is `x_factors`, Y the rest.
pub fn correlation_estimate(
    rho: &DensityOperator,
    x_factors: &[usize],
    opts: &CorOptions,
) -> Result<CorrelationEstimate> {
    rho.require_normalized()?;
    let space = rho.space();
    let x = space.normalize_selection(x_factors)?;
    let y = space.complement(&x);
    let mut perm = x.clone();
    perm.extend_from_slice(&y);
    let ordered = rho.permute(&perm)?;
    let dim_x: usize = x.iter().map(|&k| space.local_dims()[k]).product();
    correlation_estimate_split(ordered.matrix(), dim_x, rho.dim() / dim_x, opts)
}

/// [`correlation_estimate`] for an operator already ordered X (x) Y.
pub fn correlation_estimate_split(
    rho_xy: &ComplexMatrix,
    dim_x: usize,
    dim_y: usize,
    opts: &CorOptions,
) -> Result<CorrelationEstimate> {
    if dim_x * dim_y != rho_xy.nrows() {
        return Err(Error::DimensionMismatch(dim_x * dim_y, rho_xy.nrows()));
    }
    if dim_x > MAX_SIDE_DIM || dim_y > MAX_SIDE_DIM {
        return compressed_estimate(rho_xy, dim_x, dim_y, opts);
    }
    let delta = delta_operator(rho_xy, dim_x, dim_y);
    let upper = linalg::trace_norm(&linalg::hermitize(&delta));
    let hiding = datahiding_witness(&delta, dim_x, dim_y);
    let seeded = hiding.iter().max_by(|a, b| a.value.total_cmp(&b.value)).expect("at least one block");

    // random unitary starts plus one start from the best data-hiding block
    let mut starts: Vec<ComplexMatrix> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| linalg::haar_unitary(dim_y, opts.seed.stream(r as u64)).expect("dim >= 1"))
        .collect();
    let y_start = &seeded.y / c(linalg::operator_norm(&seeded.y).max(1.0), 0.0);
    starts.push(y_start);
    let runs: Vec<Run> = starts.into_par_iter().map(|n0| alternate(&delta, n0, dim_x, dim_y, opts)).collect();

    let best_run = runs.into_iter().reduce(|a, b| if b.value > a.value { b } else { a }).expect("at least one run");
    let run_value = witness_value(&delta, &best_run.m, &best_run.n, dim_x, dim_y);
    let (lower, m, n, source) = if run_value >= seeded.value {
        (run_value, best_run.m, best_run.n, WitnessSource::Alternating)
    } else {
        (seeded.value, seeded.x.clone(), seeded.y.clone(), WitnessSource::DataHiding)
    };
    Ok(CorrelationEstimate {
        lower,
        upper,
        witness_m: m,
        witness_n: n,
        source,
        restarts: opts.restarts + 1,
        converged: best_run.converged,
        dim_x,
        dim_y,
    })
}

/// Eigenvalues below this are dropped when compressing a side to its support.
const SUPPORT_FLOOR: f64 = 1e-14;

/// Isometry onto the support of a marginal, and the dropped weight.
fn support_isometry(marginal: &ComplexMatrix) -> (ComplexMatrix, f64) {
    let eig = linalg::eigh(marginal);
    let rank = eig.values.iter().filter(|&&v| v > SUPPORT_FLOOR).count().max(1);
    let dropped = eig.values[rank..].iter().map(|v| v.abs()).sum();
    (eig.vectors.columns(0, rank).into_owned(), dropped)
}

/// `rho_XY` lives on `H_X (x) supp(rho_Y)` (and symmetrically), so operators
/// can be restricted to the marginal supports without changing `Cor`.
/// Sides above the budget are compressed; the upper bound pays for any
/// dropped weight `w` with `2 sqrt(w) + w`.
fn compressed_estimate(
    rho_xy: &ComplexMatrix,
    dim_x: usize,
    dim_y: usize,
    opts: &CorOptions,
) -> Result<CorrelationEstimate> {
    let identity_side = |d: usize| (linalg::identity(d), 0.0);
    let rho_x =
        ComplexMatrix::from_fn(dim_x, dim_x, |a, b| (0..dim_y).map(|y| rho_xy[(a * dim_y + y, b * dim_y + y)]).sum());
    let rho_y =
        ComplexMatrix::from_fn(dim_y, dim_y, |a, b| (0..dim_x).map(|x| rho_xy[(x * dim_y + a, x * dim_y + b)]).sum());
    let (wx, drop_x) = if dim_x > MAX_SIDE_DIM { support_isometry(&rho_x) } else { identity_side(dim_x) };
    let (wy, drop_y) = if dim_y > MAX_SIDE_DIM { support_isometry(&rho_y) } else { identity_side(dim_y) };
    let (rx, ry) = (wx.ncols(), wy.ncols());
    if rx > MAX_SIDE_DIM || ry > MAX_SIDE_DIM {
        return Err(Error::DimensionBudget(format!(
            "sides {dim_x} x {dim_y} (support ranks {rx} x {ry}) exceed {MAX_SIDE_DIM}"
        )));
    }
    let w = linalg::kron(&wx, &wy);
    let compressed = w.adjoint() * rho_xy * &w;
    let mut est = correlation_estimate_split(&compressed, rx, ry, opts)?;
    let dropped = drop_x + drop_y;
    est.upper += 2.0 * dropped.sqrt() + dropped;
    est.witness_m = &wx * &est.witness_m * wx.adjoint();
    est.witness_n = &wy * &est.witness_n * wy.adjoint();
    est.dim_x = dim_x;
    est.dim_y = dim_y;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, ComplexVector};
    use crate::space::TensorSpace;

    fn bell() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        linalg::outer(&ComplexVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]))
    }

    #[test]
    fn product_state_has_no_correlations() {
        let mut rng = RngSeed::new(1).rng();
        let rho = linalg::kron(&random_density(2, 2, &mut rng), &random_density(3, 3, &mut rng));
        let est = correlation_estimate_split(&rho, 2, 3, &CorOptions::default()).unwrap();
        assert!(est.upper < 1e-10 && est.lower < 1e-10);
    }

    #[test]
    fn bell_pair() {
        let est = correlation_estimate_split(&bell(), 2, 2, &CorOptions::default()).unwrap();
        assert!((est.upper - 1.5).abs() < 1e-12);
        assert!(est.lower >= 1.0 - 1e-9);
        let z = linalg::diag_real(&[1.0, -1.0]);
        let delta = delta_operator(&bell(), 2, 2);
        assert!((witness_value(&delta, &z, &z, 2, 2) - 1.0).abs() < 1e-12);
        assert!((est.reevaluate(&delta) - est.lower).abs() < 1e-12);
    }

    #[test]
    fn datahiding_examples() {
        let zero = ComplexMatrix::zeros(4, 4);
        assert!(datahiding_witness(&zero, 2, 2).iter().all(|w| w.value == 0.0));
        let delta = delta_operator(&bell(), 2, 2);
        let best = datahiding_witness(&delta, 2, 2).into_iter().map(|w| w.value).fold(0.0, f64::max);
        assert!(best >= 0.375 - 1e-12);
    }

    #[test]
    fn datahiding_werner_2x4() {
        // Werner-type mixture of a maximally entangled 2x4 isometry state and noise
        let mut v = ComplexVector::zeros(8);
        v[0] = c(0.5f64.sqrt(), 0.0);
        v[5] = c(0.5f64.sqrt(), 0.0);
        for p in [0.1, 0.5, 0.9] {
            let rho = linalg::outer(&v) * c(p, 0.0) + linalg::identity(8) * c((1.0 - p) / 8.0, 0.0);
            let delta = delta_operator(&rho, 2, 4);
            let witnesses = datahiding_witness(&delta, 2, 4);
            assert_eq!(witnesses.len(), 4);
            let best = witnesses.iter().map(|w| w.value).fold(0.0, f64::max);
            assert!(linalg::trace_norm(&delta) <= 4.0 * best + 1e-12);
            for w in &witnesses {
                assert!(linalg::operator_norm(&w.x) <= 1.0 + 1e-12 && linalg::operator_norm(&w.y) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn sandwich_on_random_states() {
        let mut rng = RngSeed::new(5).rng();
        let opts = CorOptions { restarts: 4, ..CorOptions::default() };
        for _ in 0..40 {
            let rho = random_density(16, 3, &mut rng);
            let est = correlation_estimate_split(&rho, 4, 4, &opts).unwrap();
            assert!(est.lower <= est.upper + 1e-9);
            assert!(est.lower >= est.upper / 16.0 - 1e-9);
            let delta = delta_operator(&rho, 4, 4);
            assert!((est.reevaluate(&delta) - est.lower).abs() < 1e-9);
            assert!(linalg::operator_norm(&est.witness_m) <= 1.0 + 1e-9);
            assert!(linalg::operator_norm(&est.witness_n) <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn factor_selection_and_budget() {
        let rho = DensityOperator::new(bell(), TensorSpace::uniform(2, 2).unwrap()).unwrap();
        let est = correlation_estimate(&rho, &[1], &CorOptions::default()).unwrap();
        assert!(est.lower >= 1.0 - 1e-9);
        let big = linalg::identity(128) * c(1.0 / 128.0, 0.0);
        assert!(matches!(
            correlation_estimate_split(&big, 128, 1, &CorOptions::default()),
            Err(Error::DimensionBudget(_))
        ));
    }

    #[test]
    fn large_side_compressed_to_support() {
        // a Bell pair embedded in a 2 x 128 system, Y support of rank 2
        let mut v = ComplexVector::zeros(256);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        v[5] = c(s, 0.0);
        v[128 + 77] = c(s, 0.0);
        let rho = linalg::outer(&v);
        let est = correlation_estimate_split(&rho, 2, 128, &CorOptions::default()).unwrap();
        assert!((est.upper - 1.5).abs() < 1e-9);
        assert!(est.lower >= 1.0 - 1e-9);
        let delta = delta_operator(&rho, 2, 128);
        assert!((est.reevaluate(&delta) - est.lower).abs() < 1e-9);
        assert!((linalg::trace_norm(&delta) - est.upper).abs() < 1e-9);
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = RngSeed::new(8).rng();
        let rho = random_density(9, 9, &mut rng);
        let opts = CorOptions { seed: RngSeed::new(3), ..CorOptions::default() };
        let a = correlation_estimate_split(&rho, 3, 3, &opts).unwrap();
        let b = correlation_estimate_split(&rho, 3, 3, &opts).unwrap();
        assert_eq!(a.lower, b.lower);
        assert_eq!(a.witness_m, b.witness_m);
    }
}
