//! Search for regions where the mutual information between a central block
//! and its two neighbours saturates, `I(X_C : X_L X_R) <= eps * l`.

use std::fmt;
use std::str::FromStr;

use crate::entropy::spectrum_entropy;
use crate::error::{Error, Result};
use crate::states::{Region, SiteState, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Borders of `max(1, l/2)` sites around a centre of `l` sites.
    AppendixB,
    /// Borders of `l` sites around a centre of `2l` sites.
    Lemma2,
}

impl Geometry {
    /// `(border, centre)` sizes at scale `l`.
    pub fn sizes(&self, l: usize) -> (usize, usize) {
        match self {
            Geometry::AppendixB => ((l / 2).max(1), l),
            Geometry::Lemma2 => (l, 2 * l),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Geometry::AppendixB => "appendixB",
            Geometry::Lemma2 => "lemma2",
        })
    }
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appendixB" | "appendixb" => Ok(Geometry::AppendixB),
            "lemma2" => Ok(Geometry::Lemma2),
            other => Err(Error::OutOfRange(format!("unknown geometry '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationResult {
    pub left: Region,
    pub centre: Region,
    pub right: Region,
    pub l: usize,
    /// `I(X_C : X_L X_R)` in bits.
    pub mutual_info: f64,
    /// `eps * l`.
    pub threshold: f64,
    pub met: bool,
    pub regions_scanned: usize,
}

/// `I(X_C : X_L X_R) = S(C) + S(LR) - S(LCR)` from region spectra.
pub fn tripartite_mutual_info<S: SiteState + ?Sized>(
    state: &S,
    left: &Region,
    centre: &Region,
    right: &Region,
) -> Result<f64> {
    let (n, topo) = (state.num_sites(), state.topology());
    let c = centre.sites(n, topo)?;
    let mut lr = left.sites(n, topo)?;
    lr.extend(right.sites(n, topo)?);
    let mut all = lr.clone();
    all.extend(&c);
    let s = |sites: &[usize]| -> Result<f64> {
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        Ok(spectrum_entropy(&state.region_spectrum(&sorted)?))
    };
    Ok(s(&c)? + s(&lr)? - s(&all)?)
}

fn ring_distance(a: usize, b: usize, n: usize, topo: Topology) -> usize {
    let d = a.abs_diff(b);
    match topo {
        Topology::Line => d,
        Topology::Ring => d.min(n - d),
    }
}

/// Scans scales `l >= l0` ascending and, at each scale, centre positions by
/// increasing distance from site `s`; returns the first saturating region or,
/// failing that, the minimizer of `I - eps l` with `met = false`.
pub fn saturation_scan<S: SiteState + ?Sized>(
    state: &S,
    s: usize,
    eps: f64,
    l0: usize,
    geometry: Geometry,
) -> Result<SaturationResult> {
    let (n, topo) = (state.num_sites(), state.topology());
    if !(eps > 0.0) {
        return Err(Error::EpsilonOutOfRange(eps));
    }
    if s >= n {
        return Err(Error::SiteOutOfRange { index: s, sites: n });
    }
    let l0 = l0.max(1);
    let mut best: Option<SaturationResult> = None;
    let mut scanned = 0;
    for l in l0.. {
        let (b, w) = geometry.sizes(l);
        if 2 * b + w > n {
            break;
        }
        let mut starts: Vec<usize> = match topo {
            Topology::Ring => (0..n).collect(),
            Topology::Line => (b..=n - w - b).collect(),
        };
        starts.sort_by_key(|&c| (ring_distance(c, s, n, topo), c));
        for c in starts {
            let centre = Region::new(c, w);
            let left = Region::new((c + n - b) % n, b);
            let right = Region::new((c + w) % n, b);
            let i = tripartite_mutual_info(state, &left, &centre, &right)?;
            scanned += 1;
            let threshold = eps * l as f64;
            let candidate = SaturationResult {
                left,
                centre,
                right,
                l,
                mutual_info: i,
                threshold,
                met: i <= threshold + 1e-9,
                regions_scanned: scanned,
            };
            if candidate.met {
                return Ok(candidate);
            }
            if best.as_ref().is_none_or(|b| i - threshold < b.mutual_info - b.threshold) {
                best = Some(candidate);
            }
        }
    }
    let mut out =
        best.ok_or_else(|| Error::DimensionBudget(format!("no {geometry} region of scale >= {l0} fits in {n} sites")))?;
    out.regions_scanned = scanned;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::mutual_information;
    use crate::rng::RngSeed;
    use crate::states::{ghz, haar_chain, product_zero, tfim_groundstate};

    #[test]
    fn product_state_saturates_immediately() {
        let st = product_zero(8, 2).unwrap();
        let r = saturation_scan(&st, 3, 0.1, 1, Geometry::AppendixB).unwrap();
        assert!(r.met && r.l == 1 && r.mutual_info.abs() < 1e-10);
        assert_eq!(r.centre, Region::new(3, 1));
    }

    #[test]
    fn ghz_never_saturates() {
        let st = ghz(10).unwrap();
        for g in [Geometry::AppendixB, Geometry::Lemma2] {
            let r = saturation_scan(&st, 0, 0.1, 1, g).unwrap();
            assert!(!r.met);
            assert!((r.mutual_info - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tfim_saturates_at_small_scale() {
        let gs = tfim_groundstate(12, 2.0).unwrap();
        let r = saturation_scan(&gs.state, 0, 0.5, 2, Geometry::AppendixB).unwrap();
        assert!(r.met && r.l <= 4, "{r:?}");
    }

    #[test]
    fn matches_direct_mutual_information() {
        let st = haar_chain(8, 2, RngSeed::new(4)).unwrap();
        for (g, l) in [(Geometry::AppendixB, 2), (Geometry::AppendixB, 3), (Geometry::Lemma2, 1), (Geometry::Lemma2, 2)]
        {
            let (b, w) = g.sizes(l);
            for c in [0, 3, 7] {
                let left = Region::new((c + 8 - b) % 8, b);
                let centre = Region::new(c, w);
                let right = Region::new((c + w) % 8, b);
                let fast = tripartite_mutual_info(&st, &left, &centre, &right).unwrap();
                let mut sites = left.sites(8, Topology::Ring).unwrap();
                sites.extend(right.sites(8, Topology::Ring).unwrap());
                let k = sites.len();
                sites.extend(centre.sites(8, Topology::Ring).unwrap());
                let rho = st.reduced(&sites).unwrap();
                let lr: Vec<usize> = (0..k).collect();
                let cc: Vec<usize> = (k..sites.len()).collect();
                let direct = mutual_information(&rho, &cc, &lr).unwrap();
                assert!((fast - direct).abs() < 1e-9, "{fast} vs {direct}");
            }
        }
    }

    #[test]
    fn line_keeps_regions_inside() {
        let st = haar_chain(8, 2, RngSeed::new(5)).unwrap().with_topology(Topology::Line);
        let r = saturation_scan(&st, 0, 1e-6, 1, Geometry::Lemma2).unwrap();
        assert!(r.left.start + r.left.length <= 8 && r.right.start + r.right.length <= 8);
        assert!(saturation_scan(&st, 0, 0.1, 3, Geometry::Lemma2).is_err());
    }
}
