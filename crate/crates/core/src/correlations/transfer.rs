//! Transfer-operator spectra and the MPS decay bound `D eta^l`.

use crate::error::{Error, Result};
use crate::linalg;
use crate::states::{MatrixProductState, QuantumChannel};

/// Largest bond dimension whose `D^2 x D^2` transfer matrix is diagonalized.
pub const MAX_TRANSFER_BOND: usize = 64;

const TOP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct TransferSpectrum {
    /// Eigenvalue moduli, descending.
    pub eigenvalue_moduli: Vec<f64>,
    /// Second largest modulus; 0 for a one-dimensional bond.
    pub eta: f64,
    /// Whether the largest modulus is 1 within 1e-9.
    pub gap_ok: bool,
}

/// Spectrum of `sum_k A_k (x) conj(A_k)`, which shares its eigenvalues with the channel.
pub fn transfer_operator(ch: &QuantumChannel) -> Result<TransferSpectrum> {
    if ch.dim() > MAX_TRANSFER_BOND {
        return Err(Error::DimensionBudget(format!("bond dimension {} exceeds {MAX_TRANSFER_BOND}", ch.dim())));
    }
    let mut moduli: Vec<f64> = linalg::eigenvalues_general(&ch.transfer_matrix())?.iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let eta = moduli.get(1).copied().unwrap_or(0.0);
    let gap_ok = (moduli[0] - 1.0).abs() <= TOP_TOL;
    Ok(TransferSpectrum { eigenvalue_moduli: moduli, eta, gap_ok })
}

/// `D eta^l` for a translation-invariant MPS with a unital channel.
pub fn mps_correlation_bound(mps: &MatrixProductState, l: usize) -> Result<f64> {
    let ch = mps.channel(0)?;
    ch.require_unital()?;
    let spec = transfer_operator(&ch)?;
    Ok(mps.bond_dim() as f64 * spec.eta.powi(l as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{correlation_estimate, CorOptions};
    use crate::linalg::{c, diag_real, ComplexMatrix, ZERO};
    use crate::rng::RngSeed;
    use crate::states::{aklt_mps, expander_state};

    fn paulis() -> [ComplexMatrix; 4] {
        let i = linalg::identity(2);
        let x = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
        let y = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
        let z = diag_real(&[1.0, -1.0]);
        [i, x, y, z]
    }

    #[test]
    fn identity_channel() {
        let spec = transfer_operator(&QuantumChannel::new(vec![linalg::identity(3)]).unwrap()).unwrap();
        assert!(spec.eigenvalue_moduli.iter().all(|m| (m - 1.0).abs() < 1e-12));
        assert!((spec.eta - 1.0).abs() < 1e-12 && spec.gap_ok);
    }

    #[test]
    fn depolarizing_channel() {
        let kraus = paulis().iter().map(|p| p * c(0.5, 0.0)).collect();
        let spec = transfer_operator(&QuantumChannel::new(kraus).unwrap()).unwrap();
        assert!((spec.eigenvalue_moduli[0] - 1.0).abs() < 1e-12);
        assert!(spec.eigenvalue_moduli[1..].iter().all(|m| m.abs() < 1e-12));
        assert!(spec.eta < 1e-12);
    }

    #[test]
    fn aklt_spectrum_oracle() {
        // independent oracle: the AKLT channel acts on Paulis as X,Y,Z -> -X/3,-Y/3,-Z/3
        let mps = aklt_mps(4).unwrap();
        let ch = mps.channel(0).unwrap();
        for (k, p) in paulis().iter().enumerate() {
            let expected = if k == 0 { p.clone() } else { p * c(-1.0 / 3.0, 0.0) };
            assert!((ch.apply(p) - expected).norm() < 1e-12);
        }
        let spec = transfer_operator(&ch).unwrap();
        for (m, want) in spec.eigenvalue_moduli.iter().zip([1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]) {
            assert!((m - want).abs() < 1e-8);
        }
        assert!((mps_correlation_bound(&mps, 3).unwrap() - 2.0 / 27.0).abs() < 1e-10);
    }

    #[test]
    fn random_unital_channels_have_unit_top() {
        for seed in 0..10 {
            let sample = expander_state(3, 4, 3, RngSeed::new(seed)).unwrap();
            let spec = transfer_operator(&sample.channel).unwrap();
            assert!(spec.gap_ok, "{:?}", spec.eigenvalue_moduli);
            assert!(spec.eigenvalue_moduli.iter().all(|&m| m <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn aklt_bound_holds_on_open_chain() {
        let mps = aklt_mps(9).unwrap();
        let psi = mps.open_boundary_state().unwrap();
        // factor 0 and n+1 are the virtual legs
        for l in 1..=5 {
            let x: Vec<usize> = (1..=2).collect();
            let y: Vec<usize> = (3 + l..=(4 + l).min(9)).collect();
            let mut keep = x.clone();
            keep.extend(&y);
            let rho = psi.reduced(&keep).unwrap();
            let est =
                correlation_estimate(&rho, &[0, 1], &CorOptions { restarts: 2, ..CorOptions::default() }).unwrap();
            assert!(est.upper <= mps_correlation_bound(&mps, l).unwrap() + 1e-8, "l={l}");
        }
    }

    #[test]
    fn non_unital_rejected() {
        let a0 = diag_real(&[1.0, 0.0]);
        let a1 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), ZERO, ZERO]);
        let mps = MatrixProductState::translation_invariant(vec![a0, a1], 3).unwrap();
        assert!(matches!(mps_correlation_bound(&mps, 2), Err(Error::NotUnital(_))));
    }
}
