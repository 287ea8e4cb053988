//! Single-shot state merging rates from certified entropy intervals.

use crate::entropy::{hmax_conditional, hmax_smooth, hmin_report, EntropyReport};
use crate::error::{Error, Result};
use crate::states::PureState;

#[derive(Debug, Clone)]
pub struct MergingReport {
    pub epsilon: f64,
    /// Upper end of `H_max^eps(A) - H_min(A|B) - 4 log eps + 2 log 13`.
    pub log_n_bound: f64,
    /// `H_max(A|C) - 4 log eps + 2 log 13`, sign as printed in the lemma.
    pub log_l_bound_as_stated: f64,
    /// `-H_max(A|C) - 4 log eps + 2 log 13`, the distillation-rate reading.
    pub log_l_bound_rate: f64,
    /// `13 sqrt(eps)`.
    pub error_bound: f64,
    pub hmax_a: EntropyReport,
    pub hmin_a_given_b: EntropyReport,
    pub hmax_a_given_c: EntropyReport,
}

impl MergingReport {
    pub fn overhead(&self) -> f64 {
        merging_overhead(self.epsilon)
    }

    /// Recomputes the bounds from the stored ingredients.
    pub fn recomputed(&self) -> (f64, f64, f64) {
        let k = self.overhead();
        (
            self.hmax_a.value_upper - self.hmin_a_given_b.value_lower + k,
            self.hmax_a_given_c.value_upper + k,
            -self.hmax_a_given_c.value_lower + k,
        )
    }
}

/// `-4 log2 eps + 2 log2 13`.
pub fn merging_overhead(eps: f64) -> f64 {
    -4.0 * eps.log2() + 2.0 * 13f64.log2()
}

/// Factors of `psi` are `[A, B, C]`. The smooth min-entropy of `A|B` is
/// bounded below by its unsmoothed value, which keeps `log N` an upper bound.
pub fn merging_rate_report(psi: &PureState, eps: f64) -> Result<MergingReport> {
    if psi.space().num_factors() != 3 {
        return Err(Error::InvalidState("merging needs a tripartite state [A, B, C]".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let hmax_a = hmax_smooth(&psi.reduced(&[0])?, eps)?;
    let hmin_a_given_b = hmin_report(&psi.reduced(&[0, 1])?, &[0])?;
    let hmax_a_given_c = hmax_conditional(psi, &[0], &[2])?;
    let k = merging_overhead(eps);
    Ok(MergingReport {
        epsilon: eps,
        log_n_bound: hmax_a.value_upper - hmin_a_given_b.value_lower + k,
        log_l_bound_as_stated: hmax_a_given_c.value_upper + k,
        log_l_bound_rate: -hmax_a_given_c.value_lower + k,
        error_bound: 13.0 * eps.sqrt(),
        hmax_a,
        hmin_a_given_b,
        hmax_a_given_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ComplexVector};
    use crate::protocols::decoupling::{haar_tripartite, max_entangled_ac};
    use crate::rng::RngSeed;
    use crate::space::TensorSpace;

    fn ghz3() -> PureState {
        let mut v = ComplexVector::zeros(8);
        v[0] = c(0.5f64.sqrt(), 0.0);
        v[7] = c(0.5f64.sqrt(), 0.0);
        PureState::new(v, TensorSpace::uniform(3, 2).unwrap()).unwrap()
    }

    #[test]
    fn product_state_pays_only_overhead() {
        let mut v = ComplexVector::zeros(8);
        v[0] = c(1.0, 0.0);
        let psi = PureState::new(v, TensorSpace::uniform(3, 2).unwrap()).unwrap();
        let r = merging_rate_report(&psi, 0.01).unwrap();
        assert!((r.log_n_bound - merging_overhead(0.01)).abs() < 1e-6);
        assert!((r.error_bound - 1.3).abs() < 1e-12);
    }

    #[test]
    fn maximally_entangled_distills_log_a() {
        let psi = max_entangled_ac(4, 1).unwrap();
        let r = merging_rate_report(&psi, 0.01).unwrap();
        assert!((-r.hmax_a_given_c.value_lower - 2.0).abs() < 1e-6);
        assert!((-r.hmax_a_given_c.value_upper - 2.0).abs() < 1e-6);
        assert!((r.log_l_bound_rate - r.log_l_bound_as_stated - 4.0).abs() < 1e-5);
    }

    #[test]
    fn ghz_ingredients_match_closed_forms() {
        // rho_A = I/2; rho_AB classically correlated; H_max(A|C) = -H_min(A|B) = 0
        let r = merging_rate_report(&ghz3(), 0.01).unwrap();
        let flat =
            hmax_smooth(&crate::DensityOperator::maximally_mixed(TensorSpace::new(vec![2]).unwrap()), 0.01).unwrap();
        assert!((r.hmax_a.value_upper - flat.value_upper).abs() < 1e-12);
        assert!((r.hmax_a.value_upper - 1.0).abs() < 1e-12);
        for e in [&r.hmin_a_given_b, &r.hmax_a_given_c] {
            assert!(e.value_lower.abs() < 1e-6 && e.value_upper.abs() < 1e-6, "{e:?}");
        }
    }

    #[test]
    fn report_is_reproducible_from_ingredients() {
        let psi = haar_tripartite((2, 2, 4), RngSeed::new(3)).unwrap();
        let r = merging_rate_report(&psi, 0.05).unwrap();
        let (n, ls, lr) = r.recomputed();
        assert_eq!((n, ls, lr), (r.log_n_bound, r.log_l_bound_as_stated, r.log_l_bound_rate));
        assert!(merging_rate_report(&psi, 0.0).is_err());
    }
}
