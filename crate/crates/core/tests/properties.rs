use corrlab::correlations::{correlation_estimate, CorOptions};
use corrlab::csv::sci;
use corrlab::entropy::{hmax_smooth_spectrum, hmin_conditional, von_neumann};
use corrlab::linalg::{self, random_density};
use corrlab::metrics::{d1_distance, purified_distance};
use corrlab::states::{haar_chain, read_chainstate, write_chainstate, SiteState, Topology};
use corrlab::{DensityOperator, RngSeed, TensorSpace};
use proptest::prelude::*;

fn state(dims: &[usize], rank: usize, seed: u64) -> DensityOperator {
    let space = TensorSpace::new(dims.to_vec()).unwrap();
    let dim = space.total_dim();
    DensityOperator::new(random_density(dim, rank.clamp(1, dim), &mut RngSeed::new(seed).rng()), space).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_and_purified_distance_sandwich(dim in 2usize..=8, r1 in 1usize..=8, r2 in 1usize..=8, seed in any::<u64>()) {
        let a = state(&[dim], r1, seed);
        let b = state(&[dim], r2, seed ^ 0x5555);
        let d1 = d1_distance(&a, &b).unwrap();
        let p = purified_distance(&a, &b).unwrap();
        prop_assert!(d1 <= p + 1e-9);
        prop_assert!(p <= (2.0 * d1).sqrt() + 1e-9);
    }

    #[test]
    fn smooth_hmax_interval_is_ordered_and_monotone(weights in prop::collection::vec(0.0f64..1.0, 1..12), e1 in 0.0f64..0.99, e2 in 0.0f64..0.99) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = hmax_smooth_spectrum(&p, lo).unwrap();
        let b = hmax_smooth_spectrum(&p, hi).unwrap();
        prop_assert!(a.value_lower <= a.value_upper);
        prop_assert!(b.value_upper <= a.value_upper + 1e-12);
        prop_assert!(b.value_lower <= a.value_lower + 1e-12);
        // H_max^eps never exceeds log rank, and the von Neumann entropy sits below H_max^0
        let rank = p.iter().filter(|&&x| x > 1e-10 * p[0]).count() as f64;
        prop_assert!(a.value_upper <= rank.log2() + 1e-12);
        let vn: f64 = p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum();
        prop_assert!(vn <= hmax_smooth_spectrum(&p, 0.0).unwrap().value_upper + 1e-9);
    }

    #[test]
    fn sci_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = sci(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-12 * x.abs());
        let (mantissa, exp) = s.split_once('e').unwrap();
        prop_assert_eq!(mantissa.trim_start_matches('-').len(), 14);
        prop_assert!(exp.len() >= 3 && (exp.starts_with('+') || exp.starts_with('-')));
    }

    #[test]
    fn chainstate_text_round_trip_is_exact(n in 2usize..=6, d in 2usize..=3, seed in any::<u64>(), ring in any::<bool>()) {
        let topo = if ring { Topology::Ring } else { Topology::Line };
        let s = haar_chain(n, d, RngSeed::new(seed)).unwrap().with_topology(topo);
        let mut buf = Vec::new();
        write_chainstate(&mut buf, &s).unwrap();
        let back = read_chainstate(buf.as_slice()).unwrap();
        prop_assert_eq!(back.amplitudes(), s.amplitudes());
        prop_assert_eq!(back.topology(), topo);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cor_interval_is_ordered(da in 2usize..=4, db in 2usize..=4, rank in 1usize..=16, seed in any::<u64>()) {
        let rho = state(&[da, db], rank, seed);
        let opts = CorOptions { restarts: 4, seed: RngSeed::new(seed), ..CorOptions::default() };
        let est = correlation_estimate(&rho, &[0], &opts).unwrap();
        prop_assert!(est.lower >= -1e-12);
        prop_assert!(est.lower <= est.upper + 1e-9);
        prop_assert!(est.upper <= 2.0 + 1e-9);
    }

    #[test]
    fn hmin_is_bracketed_by_entropy_bounds(da in 2usize..=4, db in 1usize..=4, rank in 1usize..=16, seed in any::<u64>()) {
        // H_min(A|B) lies in [-log2 dA, log2 dA] and below H(A|B)
        let rho = state(&[da, db], rank, seed);
        let sol = hmin_conditional(&rho, &[0]).unwrap();
        let h = sol.hmin();
        let lda = (da as f64).log2();
        prop_assert!(h >= -lda - 1e-7 && h <= lda + 1e-7);
        let cond = von_neumann(&rho).unwrap() - von_neumann(&rho.partial_trace(&[1]).unwrap()).unwrap();
        prop_assert!(h <= cond + 1e-7, "H_min {} > H(A|B) {}", h, cond);
        prop_assert!(sol.gap <= 1e-8);
    }
}

#[test]
fn unitary_invariance_of_spectra() {
    let rho = state(&[6], 6, 3);
    let u = linalg::haar_unitary(6, RngSeed::new(4)).unwrap();
    let rotated = &u * rho.matrix() * u.adjoint();
    let a = linalg::eigvalsh(rho.matrix());
    let b = linalg::eigvalsh(&rotated);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
}
