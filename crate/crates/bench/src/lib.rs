//! Seeded inputs shared by the benchmarks.

use corrlab::linalg::random_density;
use corrlab::{DensityOperator, RngSeed, TensorSpace};

/// Full-rank random state on the given factors.
pub fn random_state(dims: &[usize], seed: u64) -> DensityOperator {
    let space = TensorSpace::new(dims.to_vec()).expect("valid dims");
    let dim = space.total_dim();
    let m = random_density(dim, dim, &mut RngSeed::new(seed).rng());
    DensityOperator::new(m, space).expect("valid state")
}
