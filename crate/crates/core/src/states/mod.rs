//! State families on 1D chains and rings: generic pure states, named
//! fixtures, matrix product states, quantum expander states and transverse
//! field Ising groundstates.

mod io;
mod mps;
mod tfim;

pub use io::{read_chainstate, write_chainstate};
pub use mps::{
    aklt_mps, expander_purity, expander_purity_dense, expander_state, mps_truncate, ExpanderSample, MatrixProductState,
    PurityMode, QuantumChannel, TruncationResult, CHANNEL_TOL,
};
pub use tfim::{tfim_groundstate, tfim_groundstate_with, tfim_hamiltonian_apply, GroundState, GroundStateSolver};

use std::fmt;
use std::str::FromStr;

use crate::density::{reduce_pure, reduced_spectrum_pure, DensityOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexVector, ZERO};
use crate::rng::RngSeed;
use crate::space::TensorSpace;

/// Norm tolerance for chain states.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Line,
    Ring,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Line => f.write_str("line"),
            Topology::Ring => f.write_str("ring"),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Topology::Line),
            "ring" => Ok(Topology::Ring),
            other => Err(Error::InvalidRegion(format!("unknown topology '{other}'"))),
        }
    }
}

/// Contiguous block of sites. On a ring the block may wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub start: usize,
    pub length: usize,
}

impl Region {
    pub fn new(start: usize, length: usize) -> Self {
        Self { start, length }
    }

    /// Site indices in region order.
    pub fn sites(&self, n: usize, topology: Topology) -> Result<Vec<usize>> {
        if self.length == 0 || self.length > n {
            return Err(Error::InvalidRegion(format!("length {} on {n} sites", self.length)));
        }
        if self.start >= n {
            return Err(Error::SiteOutOfRange { index: self.start, sites: n });
        }
        match topology {
            Topology::Line if self.start + self.length > n => Err(Error::InvalidRegion(format!(
                "[{}, {}) runs past the end of a line of {n} sites",
                self.start,
                self.start + self.length
            ))),
            Topology::Line => Ok((self.start..self.start + self.length).collect()),
            Topology::Ring => Ok((0..self.length).map(|k| (self.start + k) % n).collect()),
        }
    }

    /// Number of sites strictly between two disjoint regions, minimized over
    /// both directions on a ring. `None` when the regions overlap.
    pub fn separation(&self, other: &Region, n: usize, topology: Topology) -> Option<usize> {
        let a = self.sites(n, topology).ok()?;
        let b = other.sites(n, topology).ok()?;
        if a.iter().any(|s| b.contains(s)) {
            return None;
        }
        let a_end = (self.start + self.length - 1) % n;
        let b_end = (other.start + other.length - 1) % n;
        match topology {
            Topology::Line => {
                if a_end < other.start {
                    Some(other.start - a_end - 1)
                } else {
                    Some(self.start - b_end - 1)
                }
            }
            Topology::Ring => {
                let forward = (other.start + n - a_end - 1) % n;
                let backward = (self.start + n - b_end - 1) % n;
                Some(forward.min(backward))
            }
        }
    }
}

/// Anything that can hand out reduced states of site subsets.
pub trait SiteState: Sync {
    fn num_sites(&self) -> usize;
    fn site_dim(&self) -> usize;
    fn topology(&self) -> Topology;

    /// Reduced state on `sites`, factors in the given order.
    fn reduced(&self, sites: &[usize]) -> Result<DensityOperator>;

    /// Non-zero spectrum of the reduced state on `sites`, descending.
    fn region_spectrum(&self, sites: &[usize]) -> Result<Vec<f64>> {
        Ok(self.reduced(sites)?.spectrum())
    }

    fn is_pure(&self) -> bool;

    /// A pure state whose factor `i` is site `i` (extra factors, if any, come
    /// after the sites). Enables low-rank computations on large regions.
    fn as_pure(&self) -> Option<&PureState> {
        None
    }

    fn region_sites(&self, region: &Region) -> Result<Vec<usize>> {
        region.sites(self.num_sites(), self.topology())
    }
}

/// Reorders the factors of a reduced state (given on ascending sites) into
/// the requested site order.
fn reorder(rho: DensityOperator, sites: &[usize]) -> Result<DensityOperator> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    if sorted.as_slice() == sites {
        return Ok(rho);
    }
    let perm: Vec<usize> = sites.iter().map(|s| sorted.binary_search(s).expect("present")).collect();
    rho.permute(&perm)
}

fn check_distinct(sites: &[usize], n: usize) -> Result<()> {
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != sites.len() {
        return Err(Error::InvalidRegion(format!("repeated sites in {sites:?}")));
    }
    if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
        return Err(Error::SiteOutOfRange { index: bad, sites: n });
    }
    Ok(())
}

/// Pure state on an arbitrary tensor factorization.
#[derive(Debug, Clone)]
pub struct PureState {
    amplitudes: ComplexVector,
    space: TensorSpace,
}

impl PureState {
    pub fn new(amplitudes: ComplexVector, space: TensorSpace) -> Result<Self> {
        if amplitudes.len() != space.total_dim() {
            return Err(Error::DimensionMismatch(amplitudes.len(), space.total_dim()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm}")));
        }
        Ok(Self { amplitudes, space })
    }

    /// Normalizes the input; fails only for the zero vector.
    pub fn normalized(amplitudes: ComplexVector, space: TensorSpace) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Self::new(amplitudes / c(norm, 0.0), space)
    }

    pub fn haar(space: TensorSpace, seed: RngSeed) -> Result<Self> {
        let v = linalg::haar_state(space.total_dim(), seed)?;
        Self::normalized(v, space)
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    /// Reduced state on `factors`, in the given order.
    pub fn reduced(&self, factors: &[usize]) -> Result<DensityOperator> {
        check_distinct(factors, self.space.num_factors())?;
        let rho = reduce_pure(&self.amplitudes, &self.space, factors)?;
        reorder(rho, factors)
    }

    pub fn reduced_spectrum(&self, factors: &[usize]) -> Result<Vec<f64>> {
        check_distinct(factors, self.space.num_factors())?;
        reduced_spectrum_pure(&self.amplitudes, &self.space, factors)
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_parts_unchecked(linalg::outer(&self.amplitudes), self.space.clone())
    }

    /// Applies an operator to one factor.
    pub fn apply_local(&self, factor: usize, op: &linalg::ComplexMatrix) -> Result<ComplexVector> {
        let dims = self.space.local_dims();
        if factor >= dims.len() {
            return Err(Error::FactorOutOfRange { index: factor, factors: dims.len() });
        }
        let d = dims[factor];
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::DimensionMismatch(op.nrows(), d));
        }
        let stride = self.space.strides()[factor];
        let mut out = ComplexVector::zeros(self.amplitudes.len());
        for idx in 0..self.amplitudes.len() {
            let digit = (idx / stride) % d;
            let base = idx - digit * stride;
            for row in 0..d {
                out[base + row * stride] += op[(row, digit)] * self.amplitudes[idx];
            }
        }
        Ok(out)
    }
}

/// Pure state on `n` sites of local dimension `d` arranged on a line or ring.
#[derive(Debug, Clone)]
pub struct ChainState {
    inner: PureState,
    site_dim: usize,
    topology: Topology,
}

impl ChainState {
    pub fn new(amplitudes: ComplexVector, n: usize, site_dim: usize, topology: Topology) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidState(format!("chain needs at least 2 sites, got {n}")));
        }
        let space = TensorSpace::uniform(n, site_dim)?;
        Ok(Self { inner: PureState::new(amplitudes, space)?, site_dim, topology })
    }

    pub fn normalized(amplitudes: ComplexVector, n: usize, site_dim: usize, topology: Topology) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Self::new(amplitudes / c(norm, 0.0), n, site_dim, topology)
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        self.inner.amplitudes()
    }

    pub fn pure(&self) -> &PureState {
        &self.inner
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    /// Cyclic shift: site `k` of the result is site `(k + shift) mod n` of
    /// `self`.
    pub fn rotated(&self, shift: usize) -> ChainState {
        let n = self.num_sites();
        let d = self.site_dim;
        let total = self.amplitudes().len();
        let shift = shift % n;
        let chunk = d.pow(shift as u32);
        let rest = total / chunk;
        // flat index = (first `shift` digits) * rest + tail; rotate to tail * chunk + head
        let amps = ComplexVector::from_fn(total, |idx, _| {
            let tail = idx / chunk;
            let head = idx % chunk;
            self.amplitudes()[head * rest + tail]
        });
        ChainState {
            inner: PureState { amplitudes: amps, space: self.inner.space.clone() },
            site_dim: d,
            topology: self.topology,
        }
    }

    /// Reduced state on a contiguous region, factors in region order.
    pub fn reduced_density(&self, region: &Region) -> Result<DensityOperator> {
        let sites = self.region_sites(region)?;
        if sites.windows(2).all(|w| w[0] < w[1]) {
            return self.inner.reduced(&sites);
        }
        // wrapping block on a ring: rotate so it becomes contiguous
        let rotated = self.rotated(region.start);
        rotated.inner.reduced(&(0..region.length).collect::<Vec<_>>())
    }

    pub fn dense_log_dim(&self) -> f64 {
        self.num_sites() as f64 * (self.site_dim as f64).log2()
    }
}

impl SiteState for ChainState {
    fn num_sites(&self) -> usize {
        self.inner.space.num_factors()
    }
    fn site_dim(&self) -> usize {
        self.site_dim
    }
    fn topology(&self) -> Topology {
        self.topology
    }
    fn reduced(&self, sites: &[usize]) -> Result<DensityOperator> {
        self.inner.reduced(sites)
    }
    fn region_spectrum(&self, sites: &[usize]) -> Result<Vec<f64>> {
        self.inner.reduced_spectrum(sites)
    }
    fn is_pure(&self) -> bool {
        true
    }
    fn as_pure(&self) -> Option<&PureState> {
        Some(&self.inner)
    }
}

/// Mixed state on a chain.
#[derive(Debug, Clone)]
pub struct MixedChain {
    rho: DensityOperator,
    site_dim: usize,
    topology: Topology,
}

impl MixedChain {
    pub fn new(rho: DensityOperator, topology: Topology) -> Result<Self> {
        rho.require_normalized()?;
        let dims = rho.space().local_dims();
        let d = dims[0];
        if dims.iter().any(|&x| x != d) || dims.len() < 2 {
            return Err(Error::InvalidState("mixed chain needs >= 2 sites of equal dimension".into()));
        }
        Ok(Self { rho, site_dim: d, topology })
    }

    pub fn maximally_mixed(n: usize, d: usize, topology: Topology) -> Result<Self> {
        Self::new(DensityOperator::maximally_mixed(TensorSpace::uniform(n, d)?), topology)
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    /// Purification `sum_k sqrt(p_k) |v_k>|k>` with the purifier as the last
    /// tensor factor, dimension = rank.
    pub fn purify(&self) -> Result<PureState> {
        crate::entropy::purify(&self.rho)
    }
}

impl SiteState for MixedChain {
    fn num_sites(&self) -> usize {
        self.rho.space().num_factors()
    }
    fn site_dim(&self) -> usize {
        self.site_dim
    }
    fn topology(&self) -> Topology {
        self.topology
    }
    fn reduced(&self, sites: &[usize]) -> Result<DensityOperator> {
        check_distinct(sites, self.num_sites())?;
        reorder(self.rho.partial_trace(sites)?, sites)
    }
    fn is_pure(&self) -> bool {
        false
    }
}

/// Sites of a chain whose reduced states come from a larger purified state
/// (the purifier is an extra factor outside the chain).
#[derive(Debug, Clone)]
pub struct PurifiedChain {
    state: PureState,
    num_sites: usize,
    site_dim: usize,
    topology: Topology,
}

impl PurifiedChain {
    pub fn from_mixed(mixed: &MixedChain) -> Result<Self> {
        Ok(Self {
            state: mixed.purify()?,
            num_sites: mixed.num_sites(),
            site_dim: mixed.site_dim(),
            topology: mixed.topology(),
        })
    }

    pub fn purification(&self) -> &PureState {
        &self.state
    }
}

impl SiteState for PurifiedChain {
    fn num_sites(&self) -> usize {
        self.num_sites
    }
    fn site_dim(&self) -> usize {
        self.site_dim
    }
    fn topology(&self) -> Topology {
        self.topology
    }
    fn reduced(&self, sites: &[usize]) -> Result<DensityOperator> {
        check_distinct(sites, self.num_sites)?;
        self.state.reduced(sites)
    }
    fn region_spectrum(&self, sites: &[usize]) -> Result<Vec<f64>> {
        check_distinct(sites, self.num_sites)?;
        self.state.reduced_spectrum(sites)
    }
    fn is_pure(&self) -> bool {
        false
    }
    fn as_pure(&self) -> Option<&PureState> {
        Some(&self.state)
    }
}

/// `(|0...0> + |1...1>)/sqrt(2)` on a ring of qubits.
pub fn ghz(n: usize) -> Result<ChainState> {
    let dim = 1usize << n;
    let mut v = ComplexVector::from_element(dim, ZERO);
    v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[dim - 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ChainState::new(v, n, 2, Topology::Ring)
}

/// `|0...0>` on a ring.
pub fn product_zero(n: usize, d: usize) -> Result<ChainState> {
    let mut v = ComplexVector::from_element(d.pow(n as u32), ZERO);
    v[0] = c(1.0, 0.0);
    ChainState::new(v, n, d, Topology::Ring)
}

/// `|+>^n` on a ring of qubits.
pub fn plus_state(n: usize) -> Result<ChainState> {
    let dim = 1usize << n;
    let a = 1.0 / (dim as f64).sqrt();
    ChainState::new(ComplexVector::from_element(dim, c(a, 0.0)), n, 2, Topology::Ring)
}

/// Haar-random pure state on a ring of `n` sites of dimension `d`.
pub fn haar_chain(n: usize, d: usize, seed: RngSeed) -> Result<ChainState> {
    let v = linalg::haar_state(d.pow(n as u32), seed)?;
    ChainState::normalized(v, n, d, Topology::Ring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::von_neumann;

    #[test]
    fn region_sites_and_wrap() {
        let r = Region::new(4, 3);
        assert_eq!(r.sites(6, Topology::Ring).unwrap(), vec![4, 5, 0]);
        assert!(r.sites(6, Topology::Line).is_err());
        assert!(Region::new(0, 0).sites(4, Topology::Ring).is_err());
        assert!(Region::new(0, 5).sites(4, Topology::Ring).is_err());
    }

    #[test]
    fn separations() {
        let n = 10;
        let x = Region::new(0, 2);
        let y = Region::new(5, 2);
        assert_eq!(x.separation(&y, n, Topology::Line), Some(3));
        assert_eq!(y.separation(&x, n, Topology::Line), Some(3));
        // ring: gaps 3 (forward) and 3 (sites 7,8,9)
        assert_eq!(x.separation(&y, n, Topology::Ring), Some(3));
        let z = Region::new(7, 2);
        assert_eq!(x.separation(&z, n, Topology::Ring), Some(1));
        assert_eq!(x.separation(&Region::new(1, 2), n, Topology::Ring), None);
    }

    #[test]
    fn rotation_preserves_reduced_states() {
        let s = haar_chain(5, 2, RngSeed::new(3)).unwrap();
        let r = s.rotated(2);
        // site k of r is site k+2 of s
        let a = r.reduced(&[0, 1]).unwrap();
        let b = s.reduced(&[2, 3]).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-12);
        // wrapping region matches ordered-site reduction
        let w = s.reduced_density(&Region::new(4, 2)).unwrap();
        let o = s.reduced(&[4, 0]).unwrap();
        assert!((w.matrix() - o.matrix()).norm() < 1e-12);
    }

    #[test]
    fn ghz_fixture() {
        let g = ghz(6).unwrap();
        let rho = g.reduced_density(&Region::new(2, 3)).unwrap();
        assert!((von_neumann(&rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn purification_reproduces_marginals() {
        let mut rng = RngSeed::new(5).rng();
        let rho =
            DensityOperator::new(linalg::random_density(8, 3, &mut rng), TensorSpace::uniform(3, 2).unwrap()).unwrap();
        let mixed = MixedChain::new(rho, Topology::Ring).unwrap();
        let pur = PurifiedChain::from_mixed(&mixed).unwrap();
        assert_eq!(pur.purification().space().local_dims(), &[2, 2, 2, 3]);
        for sites in [vec![0usize], vec![1, 2], vec![2, 0], vec![0, 1, 2]] {
            let a = mixed.reduced(&sites).unwrap();
            let b = pur.reduced(&sites).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-12, "{sites:?}");
        }
    }

    #[test]
    fn apply_local_flips() {
        let s = product_zero(3, 2).unwrap();
        let x = linalg::ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(1.0, 0.0), c(1.0, 0.0), ZERO]);
        let v = s.pure().apply_local(1, &x).unwrap();
        assert_eq!(v[0b010], c(1.0, 0.0));
    }

    #[test]
    fn chain_invariants() {
        assert!(ChainState::new(ComplexVector::from_element(2, c(1.0, 0.0)), 1, 2, Topology::Ring).is_err());
        assert!(ChainState::new(ComplexVector::from_element(4, c(1.0, 0.0)), 2, 2, Topology::Ring).is_err());
        assert!(ChainState::normalized(ComplexVector::from_element(4, ZERO), 2, 2, Topology::Ring).is_err());
    }
}
