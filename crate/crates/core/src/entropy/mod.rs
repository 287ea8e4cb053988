//! Entropies in bits: von Neumann, smooth max-entropy intervals, the
//! conditional min-/max-entropy pair, max-relative entropy, substate
//! smoothing and mutual informations.

mod sdp;

pub use sdp::{hmin_conditional, solve as solve_hmin_sdp, trace_a, SdpSolution, SDP_GAP_TOL};

use crate::density::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix, RANK_TOL};
use crate::metrics::purified_distance;
use crate::states::PureState;

/// `-p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    shannon(&[p, 1.0 - p])
}

/// Shannon entropy of a (sub)probability vector; zero entries skipped.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Entropy of a spectrum, with eigenvalues under the global floor dropped.
pub fn spectrum_entropy(spectrum: &[f64]) -> f64 {
    let floor = RANK_TOL * spectrum.iter().cloned().fold(0.0, f64::max);
    shannon(&spectrum.iter().map(|&x| if x > floor { x } else { 0.0 }).collect::<Vec<_>>())
}

pub fn von_neumann(rho: &DensityOperator) -> Result<f64> {
    rho.require_normalized()?;
    Ok(spectrum_entropy(&rho.spectrum()))
}

/// `tr rho (log rho - log sigma)`; infinite when the support condition fails.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    if !supported(rho.matrix(), sigma.matrix()) {
        return Ok(f64::INFINITY);
    }
    let log = |m: &ComplexMatrix| {
        let eig = linalg::eigh(m);
        let floor = eig.floor();
        eig.map(|v| if v > floor { v.log2() } else { 0.0 })
    };
    let diff = log(rho.matrix()) - log(sigma.matrix());
    Ok(linalg::trace(&(rho.matrix() * diff)).re)
}

/// How an end of an [`EntropyReport`] interval was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// The normalized truncation to the top `rank` eigenvectors keeps
    /// `kept_mass >= 1 - eps^2` and so lies in the smoothing ball.
    SpectralTruncation { rank: usize, kept_mass: f64 },
    /// Every projector of rank below `rank` captures less than `required`
    /// weight (`mass_below` is the best such weight), so no state in the ball
    /// has smaller support.
    MassThreshold { rank: usize, mass_below: f64, required: f64 },
    /// SDP witnesses with their values.
    Sdp { primal_value: f64, dual_value: f64, gap: f64 },
}

/// Certified interval `[value_lower, value_upper]` in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub value_lower: f64,
    pub value_upper: f64,
    pub certificate_lower: Certificate,
    pub certificate_upper: Certificate,
    pub epsilon: f64,
}

/// Smooth max-entropy interval of a normalized state.
pub fn hmax_smooth(rho: &DensityOperator, eps: f64) -> Result<EntropyReport> {
    rho.require_normalized()?;
    hmax_smooth_spectrum(&rho.spectrum(), eps)
}

/// Same as [`hmax_smooth`] from a descending spectrum summing to one.
pub fn hmax_smooth_spectrum(spectrum: &[f64], eps: f64) -> Result<EntropyReport> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    let floor = RANK_TOL * spectrum.first().copied().unwrap_or(0.0);
    let kept: Vec<f64> = spectrum.iter().copied().filter(|&x| x > floor).collect();
    if kept.is_empty() {
        return Err(Error::InvalidState("zero state".into()));
    }
    let total: f64 = kept.iter().sum();
    let mut prefix = Vec::with_capacity(kept.len());
    let mut acc = 0.0;
    for &x in &kept {
        acc += x;
        prefix.push(acc);
    }
    // smallest r >= 1 whose top-r mass reaches `target`
    let smallest = |target: f64| -> usize {
        let slack = 1e-12 * total;
        prefix.iter().position(|&m| m >= target - slack).map(|i| i + 1).unwrap_or(kept.len())
    };
    let upper_rank = smallest((1.0 - eps * eps) * total);
    let lower_target = (1.0 - 2.0 * eps) * total;
    let lower_rank = smallest(lower_target).min(upper_rank);
    Ok(EntropyReport {
        value_lower: (lower_rank as f64).log2(),
        value_upper: (upper_rank as f64).log2(),
        certificate_lower: Certificate::MassThreshold {
            rank: lower_rank,
            mass_below: if lower_rank > 1 { prefix[lower_rank - 2] } else { 0.0 },
            required: lower_target,
        },
        certificate_upper: Certificate::SpectralTruncation { rank: upper_rank, kept_mass: prefix[upper_rank - 1] },
        epsilon: eps,
    })
}

/// `H_max(A|C) = -H_min(A|B)` for a pure state on A, B, C. Factors of `psi`
/// listed in neither `a` nor `c` form B. Unsmoothed.
pub fn hmax_conditional(psi: &PureState, a: &[usize], c_factors: &[usize]) -> Result<EntropyReport> {
    let n = psi.space().num_factors();
    let mut ac: Vec<usize> = a.iter().chain(c_factors).copied().collect();
    ac.sort_unstable();
    ac.dedup();
    if ac.len() != a.len() + c_factors.len() {
        return Err(Error::InvalidRegion("A and C overlap".into()));
    }
    let b: Vec<usize> = (0..n).filter(|k| !ac.contains(k)).collect();
    let mut ab: Vec<usize> = a.iter().chain(&b).copied().collect();
    ab.sort_unstable();
    let rho_ab = psi.reduced(&ab)?;
    let a_pos: Vec<usize> = a.iter().map(|k| ab.binary_search(k).expect("present")).collect();
    let sol = hmin_conditional(&rho_ab, &a_pos)?;
    Ok(sdp_report(&sol, true))
}

/// [`hmax_conditional`] for a mixed `rho_AC`, purified internally; `a` lists
/// the A factors, the rest are C.
pub fn hmax_conditional_mixed(rho_ac: &DensityOperator, a: &[usize]) -> Result<EntropyReport> {
    rho_ac.require_normalized()?;
    let space = rho_ac.space();
    let a = space.normalize_selection(a)?;
    let c_factors = space.complement(&a);
    let psi = purify(rho_ac)?;
    hmax_conditional(&psi, &a, &c_factors)
}

/// Min-entropy interval `[-log2 primal, -log2 dual]`, or its negation for
/// the dual max-entropy.
fn sdp_report(sol: &SdpSolution, negate: bool) -> EntropyReport {
    let cert = Certificate::Sdp { primal_value: sol.primal_value, dual_value: sol.dual_value, gap: sol.gap };
    let (lo, hi) = (sol.hmin(), sol.hmin_upper());
    let (lo, hi) = if negate { (-hi, -lo) } else { (lo, hi) };
    EntropyReport {
        value_lower: lo,
        value_upper: hi,
        certificate_lower: cert.clone(),
        certificate_upper: cert,
        epsilon: 0.0,
    }
}

/// `H_min(A|B)` interval for `rho` with A = `a`.
pub fn hmin_report(rho: &DensityOperator, a: &[usize]) -> Result<EntropyReport> {
    Ok(sdp_report(&hmin_conditional(rho, a)?, false))
}

/// Purification with the purifier appended as the last factor.
pub fn purify(rho: &DensityOperator) -> Result<PureState> {
    let eig = linalg::eigh(rho.matrix());
    let rank = eig.rank().max(1);
    let dim = rho.dim();
    let mut amps = linalg::ComplexVector::zeros(dim * rank);
    for k in 0..rank {
        let w = eig.values[k].max(0.0).sqrt();
        for i in 0..dim {
            amps[i * rank + k] = eig.vectors[(i, k)] * c(w, 0.0);
        }
    }
    let mut dims = rho.space().local_dims().to_vec();
    dims.push(rank);
    PureState::normalized(amps, crate::space::TensorSpace::new(dims)?)
}

fn same_dim(a: &DensityOperator, b: &DensityOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// `supp rho ⊆ supp sigma` up to the global floor.
fn supported(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> bool {
    let p = linalg::support_projector(sigma);
    let outside = linalg::identity(p.nrows()) - p;
    linalg::trace(&(&outside * rho)).re <= 1e-9 * linalg::trace(rho).re.max(1e-300)
}

/// `log2 lambda_max(sigma^{-1/2} rho sigma^{-1/2})` on the support of sigma.
pub fn smax_relative(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho, sigma)?;
    if !supported(rho.matrix(), sigma.matrix()) {
        return Err(Error::SupportViolation);
    }
    let s = linalg::inv_sqrt_on_support(sigma.matrix());
    let m = linalg::hermitize(&(&s * rho.matrix() * &s));
    Ok(linalg::eigvalsh(&m)[0].log2())
}

/// Output of [`substate_smoothing`].
#[derive(Debug, Clone)]
pub struct SubstateResult {
    pub smoothed: DensityOperator,
    /// Smallest threshold found by bisection.
    pub lambda: f64,
    /// `D(rho, smoothed)`, at most epsilon.
    pub distance: f64,
    /// Exact `S_max(smoothed || sigma)`: a certified upper bound on the
    /// smooth max-relative entropy.
    pub smax_smoothed: f64,
    /// Whether the smoothed state is in the ball and
    /// `smax_smoothed <= lambda + log2(1/(1-eps))` held.
    pub within_lambda_bound: bool,
}

/// Subtracts the positive part of `rho - 2^lambda sigma`, leaving a
/// subnormalized `rho~ <= 2^lambda sigma`. For non-commuting pairs the
/// difference can pick up negative eigenvalues; they are clamped, which the
/// final re-verification accounts for.
fn clip_above(rho: &DensityOperator, sigma: &DensityOperator, lambda: f64) -> Result<DensityOperator> {
    let diff = linalg::hermitize(&(rho.matrix() - sigma.matrix() * c(2f64.powf(lambda), 0.0)));
    let positive = linalg::eigh(&diff).map(|v| v.max(0.0));
    let cut = linalg::eigh(&linalg::hermitize(&(rho.matrix() - positive))).map(|v| v.max(0.0));
    DensityOperator::new(linalg::hermitize(&cut), rho.space().clone())
}

/// Clip at `2^lambda sigma`, then refill the removed weight along the
/// headroom `2^lambda sigma - rho~`: the result is normalized and, whenever
/// the clip satisfies `rho~ <= 2^lambda sigma`, still below `2^lambda sigma`.
fn smoothing_candidate(rho: &DensityOperator, sigma: &DensityOperator, lambda: f64) -> Result<DensityOperator> {
    let clipped = clip_above(rho, sigma, lambda)?;
    let t = clipped.trace();
    if t >= 1.0 - 1e-15 {
        return Ok(rho.clone());
    }
    let scaled_sigma = sigma.matrix() * c(2f64.powf(lambda), 0.0);
    let headroom = &scaled_sigma - clipped.matrix();
    let room = linalg::trace(&headroom).re;
    let s = if room > 0.0 { ((1.0 - t) / room).min(1.0) } else { 1.0 };
    let m = clipped.matrix() * c(1.0 - s, 0.0) + scaled_sigma * c(s, 0.0);
    let tr = linalg::trace(&m).re;
    DensityOperator::new(linalg::hermitize(&(m / c(tr, 0.0))), rho.space().clone())
}

/// Bisects the smoothing family for the smallest `lambda >= 0` whose
/// candidate lies within purified distance `eps` of `rho`. The candidate
/// satisfies `S_max(rho' || sigma) <= lambda` by construction when the pair
/// commutes; this is re-verified for every input.
pub fn substate_smoothing(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<SubstateResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    rho.require_normalized()?;
    let hi0 = smax_relative(rho, sigma)?.max(0.0);
    let within = |lambda: f64| -> Result<Option<DensityOperator>> {
        let cand = smoothing_candidate(rho, sigma, lambda)?;
        Ok((purified_distance(rho, &cand)? <= eps).then_some(cand))
    };
    // At lambda = S_max the clip is empty up to rounding; nudge up until the
    // family returns rho itself.
    let mut hi = hi0;
    let mut best = None;
    for _ in 0..60 {
        if let Some(found) = within(hi)? {
            best = Some(found);
            break;
        }
        hi += 1e-12_f64.max(hi * 1e-12);
    }
    let mut best = best.ok_or_else(|| Error::BisectionFailed("upper bracket not within the ball".into()))?;
    let mut lo = 0.0;
    if let Some(found) = within(lo)? {
        best = found;
        hi = lo;
    }
    for _ in 0..100 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match within(mid)? {
            Some(found) => {
                hi = mid;
                best = found;
            }
            None => lo = mid,
        }
    }
    let smoothed = best;
    let distance = purified_distance(rho, &smoothed)?;
    let smax_smoothed = smax_relative(&smoothed, sigma)?;
    let slack = (1.0 / (1.0 - eps)).log2();
    Ok(SubstateResult {
        within_lambda_bound: distance <= eps + 1e-12 && smax_smoothed <= hi + slack + 1e-9,
        smoothed,
        lambda: hi,
        distance,
        smax_smoothed,
    })
}

/// `I(A:B) = S(A) + S(B) - S(AB)` with A = `a`, B = `b` (disjoint factor
/// lists; anything else is traced out).
pub fn mutual_information(rho: &DensityOperator, a: &[usize], b: &[usize]) -> Result<f64> {
    rho.require_normalized()?;
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    ab.dedup();
    if ab.len() != a.len() + b.len() {
        return Err(Error::InvalidRegion("overlapping parts".into()));
    }
    let s = |keep: &[usize]| -> Result<f64> { Ok(spectrum_entropy(&rho.partial_trace(keep)?.spectrum())) };
    Ok(s(a)? + s(b)? - s(&ab)?)
}

/// Mutual information from a pure state, using the smaller side of each cut.
pub fn mutual_information_pure(psi: &PureState, a: &[usize], b: &[usize]) -> Result<f64> {
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    ab.dedup();
    if ab.len() != a.len() + b.len() {
        return Err(Error::InvalidRegion("overlapping parts".into()));
    }
    let s = |keep: &[usize]| -> Result<f64> { Ok(spectrum_entropy(&psi.reduced_spectrum(keep)?)) };
    Ok(s(a)? + s(b)? - s(&ab)?)
}

/// Certified upper bound `upper(H_max^eps(A)) - H_min(A|B)` on the max-mutual
/// information of A with B, for a pure state on A, B, C.
pub fn imax_upper(psi: &PureState, a: &[usize], b: &[usize], eps: f64) -> Result<f64> {
    let rho_a = psi.reduced(a)?;
    let hmax = hmax_smooth(&rho_a, eps)?;
    let mut ab: Vec<usize> = a.iter().chain(b).copied().collect();
    ab.sort_unstable();
    let rho_ab = psi.reduced(&ab)?;
    let a_pos: Vec<usize> = a.iter().map(|k| ab.binary_search(k).expect("present")).collect();
    let sol = hmin_conditional(&rho_ab, &a_pos)?;
    // -log2(primal) is the lower end of H_min, and smoothing can only raise
    // the conditional min-entropy
    Ok(hmax.value_upper - sol.hmin())
}
