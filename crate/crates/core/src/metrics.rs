//! Fidelity, purified distance and the generalized trace distance for
//! subnormalized states.

use crate::density::{DensityOperator, STATE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, eigh, sqrt_psd, ComplexMatrix};

fn same_space(rho: &DensityOperator, sigma: &DensityOperator) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

fn check_trace(op: &DensityOperator) -> Result<()> {
    if op.trace() > 1.0 + STATE_TOL {
        return Err(Error::TraceExceedsOne(op.trace()));
    }
    Ok(())
}

/// `F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1`, which equals
/// `tr sqrt(sigma^{1/2} rho sigma^{1/2})` and is symmetric by construction.
pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_space(rho, sigma)?;
    let prod = sqrt_psd(rho.matrix()) * sqrt_psd(sigma.matrix());
    Ok(linalg::singular_values(&prod).iter().sum())
}

/// `F + sqrt((1 - tr rho)(1 - tr sigma))`.
pub fn generalized_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    check_trace(rho)?;
    check_trace(sigma)?;
    let f = fidelity(rho, sigma)?;
    let slack = ((1.0 - rho.trace()).max(0.0) * (1.0 - sigma.trace()).max(0.0)).sqrt();
    Ok((f + slack).min(1.0))
}

/// `sqrt(1 - Fbar^2)`.
pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let f = generalized_fidelity(rho, sigma)?;
    Ok((1.0 - f * f).max(0.0).sqrt())
}

/// `||rho - sigma||_1 / 2 + |tr rho - tr sigma| / 2`.
pub fn d1_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_space(rho, sigma)?;
    check_trace(rho)?;
    check_trace(sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    Ok(0.5 * linalg::trace_norm(&diff) + 0.5 * (rho.trace() - sigma.trace()).abs())
}

/// Effect `0 <= M <= I` attaining `max_M |tr(M (rho - sigma))|`: the
/// projector onto the positive or the negative eigenspace of the difference,
/// whichever carries more weight. Returns the effect and its value.
pub fn d1_optimal_effect(rho: &DensityOperator, sigma: &DensityOperator) -> Result<(ComplexMatrix, f64)> {
    same_space(rho, sigma)?;
    let eig = eigh(&(rho.matrix() - sigma.matrix()));
    let pos: f64 = eig.values.iter().filter(|&&v| v > 0.0).sum();
    let neg: f64 = -eig.values.iter().filter(|&&v| v < 0.0).sum::<f64>();
    if pos >= neg {
        Ok((eig.map(|v| if v > 0.0 { 1.0 } else { 0.0 }), pos))
    } else {
        Ok((eig.map(|v| if v < 0.0 { 1.0 } else { 0.0 }), neg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag_real, random_density};
    use crate::rng::RngSeed;
    use crate::space::TensorSpace;

    fn qubit(values: &[f64]) -> DensityOperator {
        DensityOperator::single(diag_real(values)).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let zero = qubit(&[1.0, 0.0]);
        let one = qubit(&[0.0, 1.0]);
        let mixed = qubit(&[0.5, 0.5]);
        assert!((fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_of_self_is_trace() {
        let mut rng = RngSeed::new(1).rng();
        let rho = DensityOperator::single(random_density(4, 4, &mut rng) * c(0.7, 0.0)).unwrap();
        assert!((fidelity(&rho, &rho).unwrap() - 0.7).abs() < 1e-10);
    }

    #[test]
    fn generalized_fidelity_examples() {
        let a = qubit(&[0.5, 0.0]);
        let b = qubit(&[0.0, 0.5]);
        assert!((generalized_fidelity(&a, &b).unwrap() - 0.5).abs() < 1e-12);
        let t = qubit(&[0.3, 0.2]);
        assert!((generalized_fidelity(&t, &t).unwrap() - 1.0).abs() < 1e-10);
        let n = qubit(&[0.6, 0.4]);
        assert!((generalized_fidelity(&n, &a).unwrap() - fidelity(&n, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn purified_distance_examples() {
        let zero = qubit(&[1.0, 0.0]);
        let one = qubit(&[0.0, 1.0]);
        let mixed = qubit(&[0.5, 0.5]);
        assert!(purified_distance(&zero, &zero).unwrap() < 1e-7);
        assert!((purified_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((purified_distance(&zero, &mixed).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn d1_examples() {
        let zero = qubit(&[1.0, 0.0]);
        let mixed = qubit(&[0.5, 0.5]);
        assert!(d1_distance(&zero, &zero).unwrap() < 1e-15);
        assert!((d1_distance(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        let mut rng = RngSeed::new(9).rng();
        let rho = DensityOperator::single(random_density(3, 3, &mut rng)).unwrap();
        let scaled = rho.scaled(0.9).unwrap();
        assert!((d1_distance(&rho, &scaled).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn d1_matches_variational_effect() {
        let mut rng = RngSeed::new(10).rng();
        for _ in 0..50 {
            let rho = DensityOperator::single(random_density(4, 2, &mut rng) * c(0.8, 0.0)).unwrap();
            let sigma = DensityOperator::single(random_density(4, 4, &mut rng)).unwrap();
            let (m, v) = d1_optimal_effect(&rho, &sigma).unwrap();
            let direct = (&m * (rho.matrix() - sigma.matrix())).trace().re.abs();
            assert!((direct - v).abs() < 1e-10);
            assert!((d1_distance(&rho, &sigma).unwrap() - v).abs() < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_and_trace_errors() {
        let a = qubit(&[0.5, 0.5]);
        let b = DensityOperator::maximally_mixed(TensorSpace::new(vec![3]).unwrap());
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch(2, 3))));
    }
}
