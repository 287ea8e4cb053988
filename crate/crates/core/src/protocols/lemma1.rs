//! Numeric checks of the correlations-versus-entropies lemma: the
//! measurement witness for `Cor`, the entropy boost inequality and the
//! random-projector mechanism.

use rayon::prelude::*;

use crate::correlations::{correlation_estimate_split, CorOptions};
use crate::density::DensityOperator;
use crate::entropy::hmax_smooth;
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::metrics::{d1_optimal_effect, purified_distance};
use crate::rng::RngSeed;
use crate::states::PureState;

const EFFECT_TOL: f64 = 1e-10;

/// What a measurement `M` on A does to C.
#[derive(Debug, Clone)]
pub struct PostSelection {
    /// `tr(M rho_A)`.
    pub probability: f64,
    /// Normalized `tr_A((M (x) I) rho_AC) / p`; `None` when `p` vanishes.
    pub conditional: Option<DensityOperator>,
    pub marginal: DensityOperator,
}

/// `rho_ac` is a `dim_a * dim_c` matrix with A first.
pub fn post_select(rho_ac: &ComplexMatrix, dim_a: usize, m: &ComplexMatrix) -> Result<PostSelection> {
    if m.nrows() != dim_a || m.ncols() != dim_a || !rho_ac.nrows().is_multiple_of(dim_a) {
        return Err(Error::DimensionMismatch(m.nrows(), dim_a));
    }
    let dim_c = rho_ac.nrows() / dim_a;
    let eig = linalg::eigh(&linalg::hermitize(m));
    let lo = eig.values.last().copied().unwrap_or(0.0);
    let hi = eig.values.first().copied().unwrap_or(0.0);
    if lo < -EFFECT_TOL || hi > 1.0 + EFFECT_TOL || linalg::hermiticity_residual(m) > EFFECT_TOL {
        return Err(Error::OutOfRange(format!("effect spectrum [{lo:.3e}, {hi:.3e}] outside [0, 1]")));
    }
    let partial = |w: &dyn Fn(usize, usize) -> crate::C64| {
        ComplexMatrix::from_fn(dim_c, dim_c, |r, s| {
            let mut acc = linalg::ZERO;
            for a in 0..dim_a {
                for a2 in 0..dim_a {
                    acc += w(a2, a) * rho_ac[(a * dim_c + r, a2 * dim_c + s)];
                }
            }
            acc
        })
    };
    let marginal = DensityOperator::single(linalg::hermitize(&partial(&|a2, a| {
        if a == a2 {
            linalg::ONE
        } else {
            linalg::ZERO
        }
    })))?;
    let tilde = linalg::hermitize(&partial(&|a2, a| m[(a2, a)]));
    let p = linalg::trace(&tilde).re;
    let conditional = if p > 1e-14 { Some(DensityOperator::single(tilde / c(p, 0.0))?) } else { None };
    Ok(PostSelection { probability: p, conditional, marginal })
}

/// Lower bounds on `Cor(A:C)` obtained from one effect `M` on A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementWitness {
    /// `(p / 2) D(rho~_C, rho_C)^2`.
    pub purified_bound: f64,
    /// `tr((M (x) N)(rho_AC - rho_A (x) rho_C))` with `N` the optimal
    /// effect on C, i.e. `p * D_1(rho~_C, rho_C)`.
    pub witness_value: f64,
    pub probability: f64,
}

pub fn cor_lower_from_measurement(
    rho_ac: &ComplexMatrix,
    dim_a: usize,
    m: &ComplexMatrix,
) -> Result<MeasurementWitness> {
    let ps = post_select(rho_ac, dim_a, m)?;
    let Some(cond) = ps.conditional else {
        return Ok(MeasurementWitness { purified_bound: 0.0, witness_value: 0.0, probability: ps.probability });
    };
    let d = purified_distance(&cond, &ps.marginal)?;
    let (_, d1) = d1_optimal_effect(&cond, &ps.marginal)?;
    Ok(MeasurementWitness {
        purified_bound: 0.5 * ps.probability * d * d,
        witness_value: ps.probability * d1,
        probability: ps.probability,
    })
}

#[derive(Debug, Clone)]
pub struct Part3Check {
    pub delta: f64,
    pub cor_lower: f64,
    pub cor_upper: f64,
    /// `sqrt(Cor_lower / (1/2 - delta))`, `None` when it vanishes.
    pub gamma: Option<f64>,
    /// `gamma < 1`; outside this range the check is reported, not asserted.
    pub in_range: bool,
    /// `2 gamma >= 1`: the smoothing ball contains the zero operator.
    pub trivial: bool,
    /// Lower end of `H_max^{2 gamma}(A)`; `-inf` in the trivial regime.
    pub lhs: f64,
    /// Upper end of `H_max^delta(A)` plus `2 log|B| + log(2 / gamma^2)`.
    pub rhs: f64,
    pub passed: bool,
}

impl Part3Check {
    pub fn skipped(&self) -> bool {
        !self.in_range
    }
}

/// Factors of `psi` are `[A, B, C]`.
pub fn lemma1_part3_check(psi: &PureState, delta: f64, opts: &CorOptions) -> Result<Part3Check> {
    let dims = tripartite(psi)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::EpsilonOutOfRange(delta));
    }
    let rho_ac = psi.reduced(&[0, 2])?;
    let est = correlation_estimate_split(rho_ac.matrix(), dims[0], dims[2], opts)?;
    let gamma = (est.lower.max(0.0) / (0.5 - delta)).sqrt();
    let mut out = Part3Check {
        delta,
        cor_lower: est.lower,
        cor_upper: est.upper,
        gamma: None,
        in_range: false,
        trivial: false,
        lhs: f64::NAN,
        rhs: f64::NAN,
        passed: true,
    };
    if !(gamma > 1e-12) {
        return Ok(out);
    }
    out.gamma = Some(gamma);
    if gamma >= 1.0 {
        return Ok(out);
    }
    out.in_range = true;
    let rho_a = psi.reduced(&[0])?;
    out.trivial = 2.0 * gamma >= 1.0;
    out.lhs = if out.trivial { f64::NEG_INFINITY } else { hmax_smooth(&rho_a, 2.0 * gamma)?.value_lower };
    out.rhs = hmax_smooth(&rho_a, delta)?.value_upper + 2.0 * (dims[1] as f64).log2() + (2.0 / (gamma * gamma)).log2();
    out.passed = out.lhs <= out.rhs + 1e-9;
    Ok(out)
}

fn tripartite(psi: &PureState) -> Result<Vec<usize>> {
    let dims = psi.space().local_dims().to_vec();
    if dims.len() != 3 {
        return Err(Error::InvalidState(format!("expected factors [A, B, C], got {}", dims.len())));
    }
    Ok(dims)
}

#[derive(Debug, Clone, Copy)]
pub struct DemoParams {
    pub delta: f64,
    pub nu: f64,
    /// `|Q_0|`.
    pub projector_rank: usize,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub params: DemoParams,
    /// `|P_A| = 2^{H_max^nu(A)}` and `tr(P_A rho_A)`.
    pub p_rank: usize,
    pub p_mass: f64,
    /// `|P_B| = 2^{H_max^delta(B)}` and `tr(P_B rho_B)`.
    pub pb_rank: usize,
    pub pb_mass: f64,
    /// Per-sample `p * D_1(rho~_C, rho_C)`: the `Cor(A:C)` lower bound
    /// witnessed by `Q`.
    pub cor_lower: Vec<f64>,
    /// Per-sample `D(pi~_C, rho~_C)`.
    pub pi_distance: Vec<f64>,
    /// `alpha` with mixture weight `2 delta`; infinite when its denominator
    /// is not positive.
    pub alpha: f64,
    /// Fraction of samples with `D(pi~_C, rho~_C) <= sqrt(alpha)`.
    pub close_fraction: f64,
}

impl DemoReport {
    pub fn fraction_at_least(&self, threshold: f64) -> f64 {
        if self.cor_lower.is_empty() {
            return 0.0;
        }
        self.cor_lower.iter().filter(|&&v| v >= threshold).count() as f64 / self.cor_lower.len() as f64
    }
}

/// `(w q/P + 8/sqrt P) / ((1 - 2 nu) q/P - 8/sqrt P)`.
pub fn alpha(weight: f64, nu: f64, p_rank: usize, q_rank: usize) -> f64 {
    let ratio = q_rank as f64 / p_rank as f64;
    let slack = 8.0 / (p_rank as f64).sqrt();
    let den = (1.0 - 2.0 * nu) * ratio - slack;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        (weight * ratio + slack) / den
    }
}

/// Top eigenvectors of `rho` spanning `2^{H_max^eps}` dimensions.
fn typical_subspace(rho: &DensityOperator, eps: f64) -> Result<(ComplexMatrix, f64)> {
    let report = hmax_smooth(rho, eps)?;
    let rank = report.value_upper.exp2().round() as usize;
    let eig = linalg::eigh(rho.matrix());
    let v = eig.vectors.columns(0, rank).into_owned();
    let mass = eig.values[..rank].iter().sum();
    Ok((v, mass))
}

/// Samples Haar projectors `Q <= P_A` of rank `projector_rank`, post-selects
/// A on `Q` and records the correlations it creates with C and the distance
/// between the post-selected typical and actual states of C.
pub fn lemma1_random_measurement_demo(psi: &PureState, params: DemoParams, seed: RngSeed) -> Result<DemoReport> {
    let dims = tripartite(psi)?;
    let (da, db, dc) = (dims[0], dims[1], dims[2]);
    let (pa, p_mass) = typical_subspace(&psi.reduced(&[0])?, params.nu)?;
    let (pb, pb_mass) = typical_subspace(&psi.reduced(&[1])?, params.delta)?;
    let r = pa.ncols();
    if params.projector_rank == 0 || params.projector_rank > r {
        return Err(Error::OutOfRange(format!("projector rank {} outside 1..={r}", params.projector_rank)));
    }
    let rho_ac = psi.reduced(&[0, 2])?;
    // pi = P_B psi / ||P_B psi||, then traced over B
    let proj_b = linalg::kron(&linalg::kron(&linalg::identity(da), &(&pb * pb.adjoint())), &linalg::identity(dc));
    let pi = PureState::normalized(proj_b * psi.amplitudes(), psi.space().clone())?;
    let pi_ac = pi.reduced(&[0, 2])?;
    let _ = db;

    let results = (0..params.samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.stream(s as u64).rng();
            let u = linalg::haar_unitary_with(r, &mut rng)?;
            let w = &pa * u.columns(0, params.projector_rank);
            let q = &w * w.adjoint();
            let wit = cor_lower_from_measurement(rho_ac.matrix(), da, &q)?;
            let rho_t = post_select(rho_ac.matrix(), da, &q)?.conditional;
            let pi_t = post_select(pi_ac.matrix(), da, &q)?.conditional;
            let dist = match (rho_t, pi_t) {
                (Some(a), Some(b)) => purified_distance(&a, &b)?,
                _ => 1.0,
            };
            Ok((wit.witness_value, dist))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let alpha = alpha(2.0 * params.delta, params.nu, r, params.projector_rank);
    let close = results.iter().filter(|(_, d)| *d <= alpha.sqrt() + 1e-12).count();
    Ok(DemoReport {
        params,
        p_rank: r,
        p_mass,
        pb_rank: pb.ncols(),
        pb_mass,
        cor_lower: results.iter().map(|x| x.0).collect(),
        pi_distance: results.iter().map(|x| x.1).collect(),
        alpha,
        close_fraction: if results.is_empty() { 0.0 } else { close as f64 / results.len() as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::correlation_estimate_split;
    use crate::protocols::decoupling::{haar_tripartite, max_entangled_ac};
    use crate::space::TensorSpace;

    fn bell() -> ComplexMatrix {
        max_entangled_ac(2, 1).unwrap().reduced(&[0, 2]).unwrap().matrix().clone()
    }

    #[test]
    fn identity_effect_gives_zero() {
        let w = cor_lower_from_measurement(&bell(), 2, &linalg::identity(2)).unwrap();
        assert!(w.purified_bound < 1e-12 && w.witness_value < 1e-12);
        assert!((w.probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_projector_gives_one_eighth() {
        let w = cor_lower_from_measurement(&bell(), 2, &linalg::diag_real(&[1.0, 0.0])).unwrap();
        assert!((w.probability - 0.5).abs() < 1e-12);
        assert!((w.purified_bound - 0.125).abs() < 1e-10);
        assert!((w.witness_value - 0.25).abs() < 1e-10);
    }

    #[test]
    fn product_state_gives_zero() {
        let psi = PureState::haar(TensorSpace::new(vec![3]).unwrap(), RngSeed::new(1)).unwrap();
        let phi = PureState::haar(TensorSpace::new(vec![2]).unwrap(), RngSeed::new(2)).unwrap();
        let rho = linalg::kron(&linalg::outer(psi.amplitudes()), &linalg::outer(phi.amplitudes()));
        let mut rng = RngSeed::new(3).rng();
        let m = linalg::random_density(3, 3, &mut rng);
        let w = cor_lower_from_measurement(&rho, 3, &m).unwrap();
        assert!(w.purified_bound < 1e-10 && w.witness_value < 1e-10);
    }

    #[test]
    fn witness_never_exceeds_cor_upper() {
        for s in 0..10 {
            let psi = haar_tripartite((2, 2, 3), RngSeed::new(s)).unwrap();
            let rho = psi.reduced(&[0, 2]).unwrap();
            let est = correlation_estimate_split(rho.matrix(), 2, 3, &CorOptions::default()).unwrap();
            let mut rng = RngSeed::new(50 + s).rng();
            let m = linalg::random_density(2, 2, &mut rng);
            let w = cor_lower_from_measurement(rho.matrix(), 2, &m).unwrap();
            assert!(w.purified_bound <= w.witness_value + 1e-12);
            assert!(w.witness_value <= est.upper + 1e-9);
        }
    }

    #[test]
    fn rejects_bad_effects() {
        assert!(cor_lower_from_measurement(&bell(), 2, &linalg::diag_real(&[1.5, 0.0])).is_err());
        assert!(cor_lower_from_measurement(&bell(), 2, &linalg::diag_real(&[-0.1, 0.0])).is_err());
    }

    #[test]
    fn part3_examples() {
        let mut v = crate::ComplexVector::zeros(32);
        v[0] = c(1.0, 0.0);
        let product = PureState::new(v, TensorSpace::new(vec![4, 2, 4]).unwrap()).unwrap();
        assert!(lemma1_part3_check(&product, 0.01, &CorOptions::default()).unwrap().skipped());
        for s in 0..5 {
            let psi = haar_tripartite((4, 2, 4), RngSeed::new(20 + s)).unwrap();
            let r = lemma1_part3_check(&psi, 0.01, &CorOptions::default()).unwrap();
            assert!(r.passed, "{r:?}");
        }
        let wide_b = haar_tripartite((2, 256, 2), RngSeed::new(3)).unwrap();
        let r = lemma1_part3_check(&wide_b, 0.01, &CorOptions::default()).unwrap();
        assert!(!r.trivial && r.gamma.unwrap() < 0.5 && r.lhs.is_finite() && r.passed, "{r:?}");
        let trivial_b = haar_tripartite((3, 1, 3), RngSeed::new(7)).unwrap();
        let r = lemma1_part3_check(&trivial_b, 0.01, &CorOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn demo_on_maximally_entangled_pair() {
        let psi = max_entangled_ac(2, 1).unwrap();
        let params = DemoParams { delta: 0.01, nu: 0.01, projector_rank: 1, samples: 40 };
        let r = lemma1_random_measurement_demo(&psi, params, RngSeed::new(1)).unwrap();
        assert_eq!(r.p_rank, 2);
        assert!(r.fraction_at_least(0.2) >= 0.5);
        assert!(r.alpha.is_infinite());
        assert!((r.close_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn demo_on_product_state() {
        // A maximally entangled with B, C in |0>
        let mut v = crate::ComplexVector::zeros(32);
        for a in 0..4 {
            v[10 * a] = c(0.5, 0.0);
        }
        let psi = PureState::new(v, TensorSpace::new(vec![4, 4, 2]).unwrap()).unwrap();
        let params = DemoParams { delta: 0.01, nu: 0.01, projector_rank: 1, samples: 20 };
        let r = lemma1_random_measurement_demo(&psi, params, RngSeed::new(2)).unwrap();
        assert!(r.cor_lower.iter().all(|&x| x < 1e-10));
    }

    #[test]
    fn alpha_formula() {
        assert!(alpha(0.02, 0.01, 4, 1).is_infinite());
        let a = alpha(0.02, 0.01, 1 << 12, 1 << 11);
        let (ratio, slack) = (0.5, 8.0 / 64.0);
        assert!((a - (0.02 * ratio + slack) / (0.98 * ratio - slack)).abs() < 1e-15);
    }
}
