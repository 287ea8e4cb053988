//! Certification of `(xi, l0)`-exponential decay of correlations on chains.
//!
//! Both `Cor` and `||rho_XY - rho_X (x) rho_Y||_1` shrink under partial traces
//! on either side, so a pair of regions at separation `l` is covered by the
//! largest pair sharing its inner ends. Only those maximal pairs need an
//! upper bound.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::states::{Region, SiteState, Topology};

use super::lowrank::{delta_upper, delta_upper_pure};
use super::{correlation_estimate, delta_operator, witness_value, CorOptions, CorrelationEstimate, MAX_SIDE_DIM};

/// Slack on every comparison against `2^(-l/xi)`.
pub const EDC_TOL: f64 = 1e-9;

/// Values at or below this are treated as zero by the fit.
pub const FIT_FLOOR: f64 = 1e-13;

/// Largest tolerated fit residual, in bits.
pub const FIT_RESIDUAL_BITS: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct EdcOptions {
    /// Largest region size on either side.
    pub region_cap: usize,
    pub cor: CorOptions,
    /// Failing pairs that get a full lower-bound estimate before giving up.
    pub max_full_estimates: usize,
}

impl EdcOptions {
    /// The largest cap keeping both sides within the dimension budget.
    pub fn for_state<S: SiteState + ?Sized>(state: &S) -> Self {
        let d = state.site_dim().max(2);
        let mut cap = 1;
        while d.pow(cap as u32 + 1) <= MAX_SIDE_DIM {
            cap += 1;
        }
        Self { region_cap: cap.min(state.num_sites() - 1), cor: CorOptions::default(), max_full_estimates: 24 }
    }
}

/// Decay data at one separation: the largest upper bound over all region
/// pairs, and the largest certified lower bound found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySample {
    pub l: usize,
    pub lower: f64,
    pub upper: f64,
}

/// A region pair whose upper bound exceeds `2^(-l/xi)`.
#[derive(Debug, Clone)]
pub struct Violation {
    pub x: Region,
    pub y: Region,
    pub separation: usize,
    pub bound: f64,
    pub upper: f64,
    /// Estimate for this pair; its witnesses realize `estimate.lower`.
    pub estimate: Option<CorrelationEstimate>,
}

impl Violation {
    pub fn lower(&self) -> f64 {
        self.estimate.as_ref().map_or(0.0, |e| e.lower)
    }

    /// Recomputes the witness value from the state's reduced density.
    pub fn reevaluate<S: SiteState + ?Sized>(&self, state: &S) -> Result<f64> {
        let est = self.estimate.as_ref().ok_or_else(|| Error::Uncertified("violation carries no witness".into()))?;
        let xs = state.region_sites(&self.x)?;
        let mut sites = xs.clone();
        sites.extend(state.region_sites(&self.y)?);
        let rho = state.reduced(&sites)?;
        let delta = delta_operator(rho.matrix(), est.dim_x, est.dim_y);
        Ok(witness_value(&delta, &est.witness_m, &est.witness_n, est.dim_x, est.dim_y))
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Certified,
    /// A pair whose certified lower bound exceeds `2^(-l/xi)`.
    Violated(Violation),
    /// Some upper bound fails but no lower bound was found above the envelope.
    Indeterminate(Violation),
}

#[derive(Debug, Clone)]
pub struct DecayCertificate {
    pub xi: f64,
    pub l0: usize,
    pub region_cap: usize,
    pub samples: Vec<DecaySample>,
    pub verdict: Verdict,
    pub pairs_checked: usize,
}

impl DecayCertificate {
    pub fn is_certified(&self) -> bool {
        matches!(self.verdict, Verdict::Certified)
    }

    pub fn bound(&self, l: usize) -> f64 {
        envelope(self.xi, l)
    }
}

pub fn envelope(xi: f64, l: usize) -> f64 {
    (-(l as f64) / xi).exp2()
}

/// Largest separation realizable between two non-empty regions.
pub fn max_separation(n: usize, topology: Topology) -> usize {
    match topology {
        Topology::Line => n.saturating_sub(2),
        Topology::Ring => n.saturating_sub(2) / 2,
    }
}

/// Maximal region pairs `(X, Y, l)` for `l0 <= l`; every contiguous pair of
/// regions with both sizes at most `cap` is contained in one with the same
/// separation.
pub fn dominating_pairs(n: usize, topology: Topology, l0: usize, cap: usize) -> Vec<(Region, Region, usize)> {
    let mut out = Vec::new();
    for l in l0.max(1)..=max_separation(n, topology) {
        match topology {
            Topology::Line => {
                for e in 0..n.saturating_sub(l + 1) {
                    let xs = (e + 1).saturating_sub(cap);
                    let ys = e + l + 1;
                    let ye = (e + l + cap).min(n - 1);
                    out.push((Region::new(xs, e - xs + 1), Region::new(ys, ye - ys + 1), l));
                }
            }
            Topology::Ring => {
                // X ends at e, Y starts l sites later; the far gap must stay >= l
                let room = n - 2 * l;
                let mut shapes: Vec<(usize, usize)> =
                    (1..room.min(cap + 1)).map(|a| (a, (room - a).min(cap))).filter(|&(_, b)| b >= 1).collect();
                let all = shapes.clone();
                shapes.retain(|&(a, b)| !all.iter().any(|&(a2, b2)| (a2, b2) != (a, b) && a2 >= a && b2 >= b));
                for e in 0..n {
                    for &(a, b) in &shapes {
                        out.push((Region::new((e + n + 1 - a) % n, a), Region::new((e + l + 1) % n, b), l));
                    }
                }
            }
        }
    }
    out
}

fn pair_sites<S: SiteState + ?Sized>(state: &S, x: &Region, y: &Region) -> Result<(Vec<usize>, Vec<usize>)> {
    Ok((state.region_sites(x)?, state.region_sites(y)?))
}

/// Certified upper bound on `||rho_XY - rho_X (x) rho_Y||_1`.
pub fn pair_upper<S: SiteState + ?Sized>(state: &S, x: &[usize], y: &[usize]) -> Result<f64> {
    if let Some(psi) = state.as_pure() {
        return delta_upper_pure(psi, x, y);
    }
    let mut sites = x.to_vec();
    sites.extend_from_slice(y);
    let rho = state.reduced(&sites)?;
    delta_upper(&rho, state.site_dim().pow(x.len() as u32))
}

/// Full interval estimate for one pair, X factors first.
pub fn pair_estimate<S: SiteState + ?Sized>(
    state: &S,
    x: &[usize],
    y: &[usize],
    opts: &CorOptions,
) -> Result<CorrelationEstimate> {
    let mut sites = x.to_vec();
    sites.extend_from_slice(y);
    let rho = state.reduced(&sites)?;
    let x_factors: Vec<usize> = (0..x.len()).collect();
    correlation_estimate(&rho, &x_factors, opts)
}

fn check_cap<S: SiteState + ?Sized>(state: &S, cap: usize) -> Result<()> {
    if cap == 0 {
        return Err(Error::OutOfRange("region cap must be at least 1".into()));
    }
    let dim = (state.site_dim() as f64).powi(cap as i32);
    if dim > MAX_SIDE_DIM as f64 {
        return Err(Error::DimensionBudget(format!("region cap {cap} gives side dimension {dim} > {MAX_SIDE_DIM}")));
    }
    Ok(())
}

/// Single-site pair estimates at every separation `>= l_min`, in parallel.
/// Returns, per separation, the best estimate with its regions.
fn single_site_lowers<S: SiteState + ?Sized>(
    state: &S,
    l_min: usize,
    opts: &CorOptions,
) -> Result<Vec<(usize, Region, Region, CorrelationEstimate)>> {
    let n = state.num_sites();
    let topology = state.topology();
    let pairs: Vec<(Region, Region, usize)> = dominating_pairs(n, topology, l_min, 1);
    let estimates: Vec<CorrelationEstimate> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y, _))| {
            let (xs, ys) = pair_sites(state, x, y)?;
            pair_estimate(state, &xs, &ys, &CorOptions { seed: opts.seed.fork(i as u64), ..*opts })
        })
        .collect::<Result<_>>()?;
    let mut best: Vec<(usize, Region, Region, CorrelationEstimate)> = Vec::new();
    for ((x, y, l), est) in pairs.into_iter().zip(estimates) {
        match best.iter_mut().find(|b| b.0 == l) {
            Some(b) if b.3.lower >= est.lower => {}
            Some(b) => *b = (l, x, y, est),
            None => best.push((l, x, y, est)),
        }
    }
    best.sort_by_key(|b| b.0);
    Ok(best)
}

/// Per-separation decay data for every `l >= 1`: the largest certified upper
/// bound over region pairs up to `cap` sites per side, and the largest
/// single-site lower bound.
pub fn decay_scan<S: SiteState + ?Sized>(state: &S, cap: usize, opts: &CorOptions) -> Result<Vec<DecaySample>> {
    check_cap(state, cap)?;
    let n = state.num_sites();
    let pairs = dominating_pairs(n, state.topology(), 1, cap);
    let uppers = pairs
        .par_iter()
        .map(|(x, y, _)| {
            let (xs, ys) = pair_sites(state, x, y)?;
            pair_upper(state, &xs, &ys)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lowers = single_site_lowers(state, 1, opts)?;
    let mut samples: Vec<DecaySample> =
        (1..=max_separation(n, state.topology())).map(|l| DecaySample { l, lower: 0.0, upper: 0.0 }).collect();
    for ((_, _, l), u) in pairs.iter().zip(&uppers) {
        let s = &mut samples[l - 1];
        s.upper = s.upper.max(*u);
    }
    for (l, _, _, est) in &lowers {
        samples[l - 1].lower = samples[l - 1].lower.max(est.lower);
    }
    Ok(samples)
}

/// Tests `Cor(X:Y) <= 2^(-l/xi)` on every contiguous pair with separation
/// `l >= l0` and at most `opts.region_cap` sites per side.
pub fn edc_certify<S: SiteState + ?Sized>(
    state: &S,
    xi: f64,
    l0: usize,
    opts: &EdcOptions,
) -> Result<DecayCertificate> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::OutOfRange(format!("correlation length {xi} must be positive")));
    }
    let cap = opts.region_cap;
    check_cap(state, cap)?;
    let n = state.num_sites();
    let topology = state.topology();
    let pairs = dominating_pairs(n, topology, l0, cap);
    let uppers = pairs
        .par_iter()
        .map(|(x, y, _)| {
            let (xs, ys) = pair_sites(state, x, y)?;
            pair_upper(state, &xs, &ys)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lowers = single_site_lowers(state, l0.max(1), &opts.cor)?;

    let mut samples: Vec<DecaySample> =
        (l0.max(1)..=max_separation(n, topology)).map(|l| DecaySample { l, lower: 0.0, upper: 0.0 }).collect();
    let slot = |l: usize| l - l0.max(1);
    for ((_, _, l), u) in pairs.iter().zip(&uppers) {
        let s = &mut samples[slot(*l)];
        s.upper = s.upper.max(*u);
    }
    for (l, _, _, est) in &lowers {
        let s = &mut samples[slot(*l)];
        s.lower = s.lower.max(est.lower);
    }
    let finish = |samples: Vec<DecaySample>, verdict| DecayCertificate {
        xi,
        l0,
        region_cap: cap,
        samples,
        verdict,
        pairs_checked: pairs.len(),
    };

    let mut failing: Vec<usize> =
        (0..pairs.len()).filter(|&i| uppers[i] > envelope(xi, pairs[i].2) + EDC_TOL).collect();
    if failing.is_empty() {
        return Ok(finish(samples, Verdict::Certified));
    }

    // a single-site pair above the envelope is already a strict violation
    if let Some((l, x, y, est)) =
        lowers.iter().filter(|(l, _, _, est)| est.lower > envelope(xi, *l) + EDC_TOL).max_by_key(|(l, ..)| *l)
    {
        let upper = uppers.iter().zip(&pairs).filter(|(_, p)| p.2 == *l).map(|(u, _)| *u).fold(est.upper, f64::min);
        let v = Violation {
            x: *x,
            y: *y,
            separation: *l,
            bound: envelope(xi, *l),
            upper: est.upper.min(upper),
            estimate: Some(est.clone()),
        };
        return Ok(finish(samples, Verdict::Violated(v)));
    }

    failing.sort_by(|&a, &b| {
        let size = |i: usize| pairs[i].0.length + pairs[i].1.length;
        size(a).cmp(&size(b)).then(pairs[b].2.cmp(&pairs[a].2))
    });
    let mut worst: Option<Violation> = None;
    for (k, &i) in failing.iter().take(opts.max_full_estimates).enumerate() {
        let (x, y, l) = pairs[i];
        let (xs, ys) = pair_sites(state, &x, &y)?;
        let est =
            pair_estimate(state, &xs, &ys, &CorOptions { seed: opts.cor.seed.fork(1 << 32 | k as u64), ..opts.cor })?;
        let bound = envelope(xi, l);
        let s = &mut samples[slot(l)];
        s.lower = s.lower.max(est.lower);
        let v = Violation { x, y, separation: l, bound, upper: uppers[i], estimate: Some(est) };
        if v.lower() > bound + EDC_TOL {
            return Ok(finish(samples, Verdict::Violated(v)));
        }
        let excess = |v: &Violation| v.upper - v.bound;
        if worst.as_ref().is_none_or(|w| excess(&v) > excess(w)) {
            worst = Some(v);
        }
    }
    let worst = worst.unwrap_or_else(|| {
        let i = failing[0];
        let (x, y, l) = pairs[i];
        Violation { x, y, separation: l, bound: envelope(xi, l), upper: uppers[i], estimate: None }
    });
    Ok(finish(samples, Verdict::Indeterminate(worst)))
}

/// Least-squares fit of `log2 Cor = a - l / xi` over the tail of the data.
/// `l0` is the first separation from which every residual is below half a
/// bit (at least three points are always used).
pub fn correlation_length_fit(samples: &[(usize, f64)]) -> Result<(f64, usize)> {
    let mut pts: Vec<(f64, f64, usize)> = samples
        .iter()
        .filter(|(_, v)| *v > FIT_FLOOR && v.is_finite())
        .map(|&(l, v)| (l as f64, v.log2(), l))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 3 {
        return Err(Error::FitFailed(format!("{} usable samples, need 3", pts.len())));
    }
    let mut any_decaying = false;
    for start in 0..=pts.len() - 3 {
        let tail = &pts[start..];
        let (slope, intercept) = least_squares(tail);
        if slope >= 0.0 || !slope.is_finite() {
            continue;
        }
        any_decaying = true;
        let worst = tail.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
        if worst < FIT_RESIDUAL_BITS {
            return Ok((-1.0 / slope, tail[0].2));
        }
    }
    if any_decaying {
        Err(Error::FitFailed("no tail fits within half a bit".into()))
    } else {
        Err(Error::FitFailed("correlations do not decay".into()))
    }
}

/// Decay data and the `(xi, l0)` fitted to its certified upper bounds.
#[derive(Debug, Clone)]
pub struct DecayFit {
    pub samples: Vec<DecaySample>,
    pub xi: f64,
    pub l0: usize,
}

/// [`decay_scan`] followed by [`correlation_length_fit`] on the upper
/// bounds, so the fitted envelope dominates the measured correlations.
pub fn decay_fit<S: SiteState + ?Sized>(state: &S, cap: usize, opts: &CorOptions) -> Result<DecayFit> {
    let samples = decay_scan(state, cap, opts)?;
    let pts: Vec<(usize, f64)> = samples.iter().map(|s| (s.l, s.upper)).collect();
    let (xi, l0) = correlation_length_fit(&pts)?;
    Ok(DecayFit { samples, xi, l0 })
}

fn least_squares(pts: &[(f64, f64, usize)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSeed;
    use crate::states::{ghz, product_zero};

    #[test]
    fn pair_enumeration_covers_every_pair() {
        for (n, topology) in [(7, Topology::Line), (8, Topology::Ring), (9, Topology::Ring)] {
            let cap = 3;
            let dom = dominating_pairs(n, topology, 1, cap);
            for xs in 0..n {
                for a in 1..=cap {
                    for ys in 0..n {
                        for b in 1..=cap {
                            let (x, y) = (Region::new(xs, a), Region::new(ys, b));
                            let Some(l) = x.separation(&y, n, topology) else { continue };
                            if l == 0 {
                                continue;
                            }
                            let xset = x.sites(n, topology).unwrap();
                            let yset = y.sites(n, topology).unwrap();
                            let covered = dom.iter().any(|(dx, dy, dl)| {
                                let dxs = dx.sites(n, topology).unwrap();
                                let dys = dy.sites(n, topology).unwrap();
                                *dl == l
                                    && ((xset.iter().all(|s| dxs.contains(s)) && yset.iter().all(|s| dys.contains(s)))
                                        || (xset.iter().all(|s| dys.contains(s))
                                            && yset.iter().all(|s| dxs.contains(s))))
                            });
                            assert!(covered, "{n} {topology} {x:?} {y:?}");
                        }
                    }
                }
            }
            for (x, y, l) in &dom {
                assert_eq!(x.separation(y, n, topology), Some(*l));
                assert!(x.length <= cap && y.length <= cap);
            }
        }
    }

    #[test]
    fn product_state_certified() {
        let state = product_zero(6, 2).unwrap();
        let cert = edc_certify(&state, 0.5, 1, &EdcOptions::for_state(&state)).unwrap();
        assert!(cert.is_certified());
        assert!(cert.samples.iter().all(|s| s.upper < 1e-9));
    }

    #[test]
    fn ghz_strict_violation() {
        let state = ghz(10).unwrap();
        let opts = EdcOptions { region_cap: 3, ..EdcOptions::for_state(&state) };
        let cert = edc_certify(&state, 2.0, 1, &opts).unwrap();
        let Verdict::Violated(v) = &cert.verdict else { panic!("{:?}", cert.verdict) };
        assert!(v.lower() >= 1.0 - 1e-9);
        assert_eq!(v.separation, 4);
        assert!((v.reevaluate(&state).unwrap() - v.lower()).abs() < 1e-9);
    }

    #[test]
    fn cap_budget() {
        let state = ghz(10).unwrap();
        let opts = EdcOptions { region_cap: 7, ..EdcOptions::for_state(&state) };
        assert!(matches!(edc_certify(&state, 2.0, 1, &opts), Err(Error::DimensionBudget(_))));
        assert_eq!(EdcOptions::for_state(&state).region_cap, 6);
    }

    #[test]
    fn fit_examples() {
        let exact: Vec<(usize, f64)> = (1..8).map(|l| (l, (-(l as f64) / 2.0).exp2())).collect();
        let (xi, l0) = correlation_length_fit(&exact).unwrap();
        assert!((xi - 2.0).abs() < 1e-9 && l0 == 1);
        let flat: Vec<(usize, f64)> = (1..8).map(|l| (l, 0.3)).collect();
        assert!(matches!(correlation_length_fit(&flat), Err(Error::FitFailed(_))));
        assert!(correlation_length_fit(&exact[..2]).is_err());
        // a plateau at short range moves l0 out
        let kinked: Vec<(usize, f64)> =
            (1..11).map(|l| (l, if l <= 3 { 0.9 } else { (-(l as f64) / 2.0).exp2() })).collect();
        let (xi, l0) = correlation_length_fit(&kinked).unwrap();
        assert!((xi - 2.0).abs() < 1e-9 && l0 == 4, "{xi} {l0}");
    }

    #[test]
    fn deterministic_scan() {
        let state = crate::states::haar_chain(8, 2, RngSeed::new(2)).unwrap();
        let opts = CorOptions { restarts: 3, ..CorOptions::default() };
        assert_eq!(decay_scan(&state, 2, &opts).unwrap(), decay_scan(&state, 2, &opts).unwrap());
    }
}
