//! Upper bounds on `||rho_XY - rho_X (x) rho_Y||_1` that avoid forming the
//! full difference operator when the marginals have low rank.

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::states::PureState;

use super::delta_operator;

/// Total spectral weight a factorization may drop.
pub const TAIL_BUDGET: f64 = 1e-13;

/// Largest dense operator dimension the fallback will diagonalize.
pub const DENSE_DELTA_DIM: usize = 4096;

/// Added to every certified bound to cover rounding in the diagonalization.
const ROUNDING_SLACK: f64 = 1e-12;

/// `F` with `F F^dagger ~ rho_sel` for a pure state, rows ordered as `sel`
/// (in the given order). Returns `F` and the dropped weight
/// `tr(rho_sel - F F^dagger)`.
pub fn pure_factor(psi: &PureState, sel: &[usize]) -> Result<(ComplexMatrix, f64)> {
    let space = psi.space();
    let n = space.num_factors();
    for (i, &k) in sel.iter().enumerate() {
        if k >= n {
            return Err(Error::FactorOutOfRange { index: k, factors: n });
        }
        if sel[..i].contains(&k) {
            return Err(Error::InvalidRegion(format!("factor {k} selected twice")));
        }
    }
    let rest = space.complement(sel);
    let row_off = space.offsets(sel);
    let col_off = space.offsets(&rest);
    let v = psi.amplitudes();
    let m = ComplexMatrix::from_fn(row_off.len(), col_off.len(), |r, t| v[row_off[r] + col_off[t]]);

    let small_rows = m.nrows() <= m.ncols();
    let gram = if small_rows { &m * m.adjoint() } else { m.adjoint() * &m };
    let eig = linalg::eigh(&gram);
    // eigenvalues are descending; drop from the bottom while the budget allows
    let mut dropped = 0.0;
    let mut kept = eig.values.len();
    while kept > 1 && dropped + eig.values[kept - 1].abs() <= TAIL_BUDGET {
        dropped += eig.values[kept - 1].abs();
        kept -= 1;
    }
    let f = if small_rows {
        let mut f = eig.vectors.columns(0, kept).into_owned();
        for j in 0..kept {
            f.column_mut(j).scale_mut(eig.values[j].max(0.0).sqrt());
        }
        f
    } else {
        &m * eig.vectors.columns(0, kept)
    };
    Ok((f, dropped))
}

/// Certified upper bound on `||rho_XY - rho_X (x) rho_Y||_1` for a pure
/// state, from rank factorizations of the three marginals.
pub fn delta_upper_pure(psi: &PureState, x: &[usize], y: &[usize]) -> Result<f64> {
    let mut xy = x.to_vec();
    xy.extend_from_slice(y);
    let (f_xy, w_xy) = pure_factor(psi, &xy)?;
    let (f_x, w_x) = pure_factor(psi, x)?;
    let (f_y, w_y) = pure_factor(psi, y)?;
    let f_prod = linalg::kron(&f_x, &f_y);
    let rows = f_xy.nrows();
    let (k1, k2) = (f_xy.ncols(), f_prod.ncols());
    let cols = k1 + k2;
    let core = if cols >= rows {
        &f_xy * f_xy.adjoint() - &f_prod * f_prod.adjoint()
    } else {
        let mut g = ComplexMatrix::zeros(rows, cols);
        g.columns_mut(0, k1).copy_from(&f_xy);
        g.columns_mut(k1, k2).copy_from(&f_prod);
        let r = g.qr().r();
        let mut rj = r.clone();
        for j in k1..cols {
            rj.column_mut(j).neg_mut();
        }
        &rj * r.adjoint()
    };
    Ok(linalg::trace_norm(&linalg::hermitize(&core)) + w_xy + w_x + w_y + ROUNDING_SLACK)
}

/// Dense `||rho_XY - rho_X (x) rho_Y||_1` for an operator ordered X (x) Y.
pub fn delta_upper(rho_xy: &DensityOperator, dim_x: usize) -> Result<f64> {
    let d = rho_xy.dim();
    if d > DENSE_DELTA_DIM {
        return Err(Error::DimensionBudget(format!("difference operator of dimension {d}")));
    }
    if dim_x == 0 || !d.is_multiple_of(dim_x) {
        return Err(Error::DimensionMismatch(dim_x, d));
    }
    let delta = delta_operator(rho_xy.matrix(), dim_x, d / dim_x);
    Ok(linalg::trace_norm(&linalg::hermitize(&delta)) + ROUNDING_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use crate::space::TensorSpace;
    use crate::states::{ghz, haar_chain, SiteState};

    fn dense(psi: &PureState, x: &[usize], y: &[usize]) -> f64 {
        let space = psi.space();
        let mut all = x.to_vec();
        all.extend_from_slice(y);
        let rho = psi.reduced(&all).unwrap();
        let dim_x: usize = x.iter().map(|&k| space.local_dims()[k]).product();
        delta_upper(&rho, dim_x).unwrap()
    }

    #[test]
    fn factor_reproduces_marginal() {
        let chain = haar_chain(6, 2, RngSeed::new(4)).unwrap();
        let psi = chain.pure();
        for sel in [vec![0usize], vec![4, 1], vec![0, 1, 2, 3, 5]] {
            let (f, w) = pure_factor(psi, &sel).unwrap();
            let rho = psi.reduced(&sel).unwrap();
            assert!((rho.matrix() - &f * f.adjoint()).norm() < 1e-12);
            assert!(w <= TAIL_BUDGET);
        }
    }

    #[test]
    fn matches_dense_on_random_chains() {
        for seed in 0..6 {
            let chain = haar_chain(8, 2, RngSeed::new(seed)).unwrap();
            let psi = chain.pure();
            for (x, y) in [(vec![0usize], vec![2usize]), (vec![1, 0], vec![5, 6, 7]), (vec![3, 4], vec![0])] {
                let lr = delta_upper_pure(psi, &x, &y).unwrap();
                let d = dense(psi, &x, &y);
                assert!((lr - d).abs() < 1e-9, "{lr} vs {d}");
            }
        }
    }

    #[test]
    fn ghz_exact() {
        // rho_XY = (|00><00| + |11><11|)/2 on two sites, product of marginals I/4
        let g = ghz(6).unwrap();
        let v = delta_upper_pure(g.pure(), &[0], &[3]).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
        let zero = crate::states::product_zero(5, 3).unwrap();
        assert!(delta_upper_pure(zero.pure(), &[0, 1], &[4]).unwrap() < 1e-10);
        let _ = TensorSpace::uniform(2, 2).unwrap();
        let _ = g.num_sites();
    }

    #[test]
    fn rejects_bad_selection() {
        let g = ghz(4).unwrap();
        assert!(pure_factor(g.pure(), &[0, 0]).is_err());
        assert!(pure_factor(g.pure(), &[7]).is_err());
    }
}
