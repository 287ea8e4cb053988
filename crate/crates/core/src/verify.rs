//! Randomized and closed-form checks of every inequality the library relies
//! on, grouped into suites. Each check reports how many instances it ran,
//! how many violated the inequality, and a re-runnable witness for the first
//! violation.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::correlations::{
    correlation_estimate_split, datahiding_witness, decay_fit, delta_operator, delta_upper_pure, edc_certify,
    mps_correlation_bound, transfer_operator, witness_value, CorOptions, EdcOptions, Verdict,
};
use crate::csv::sci;
use crate::density::DensityOperator;
use crate::entropy::{binary_entropy, hmax_smooth, hmax_smooth_spectrum, hmin_conditional, von_neumann};
use crate::error::{Error, Result};
use crate::linalg::{self, c, diag_real, random_density, ComplexMatrix};
use crate::metrics::{d1_distance, purified_distance};
use crate::protocols::decoupling::{haar_tripartite, max_entangled_ac};
use crate::protocols::{
    cor_lower_from_measurement, decoupling_merging_experiment, haar_decoupling_experiment, lemma1_part3_check,
    lemma1_random_measurement_demo, merging_rate_report, random_rank_povm, theorem_harness, DemoParams, HarnessOptions,
};
use crate::rng::RngSeed;
use crate::space::TensorSpace;
use crate::states::{
    aklt_mps, expander_purity, expander_purity_dense, expander_state, ghz, haar_chain, product_zero, tfim_groundstate,
    MatrixProductState, MixedChain, PurityMode, SiteState, Topology,
};

pub const SUITES: &[&str] = &[
    "metrics",
    "entropy",
    "sdp",
    "correlations",
    "mps",
    "expander",
    "decoupling",
    "povm",
    "merging",
    "edc",
    "theorem",
    "lemma1",
];

/// Slack granted to every inequality.
pub const SLACK: f64 = 1e-9;

/// Frozen threshold for correlations created by a random measurement, and
/// for `Cor(A:C)` of Haar states on the twelve-qubit partition.
pub const COR_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct LemmaCheck {
    pub suite: &'static str,
    pub lemma: String,
    pub instances: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; negative when every instance holds with room.
    pub worst_excess: f64,
    pub witness: Option<String>,
    pub note: String,
}

impl LemmaCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.instances > 0
    }
}

impl fmt::Display for LemmaCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: {} instances={} violations={} worst_excess={}",
            self.suite,
            self.lemma,
            if self.passed() { "PASS" } else { "FAIL" },
            self.instances,
            self.violations,
            sci(self.worst_excess)
        )?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        if let Some(w) = &self.witness {
            write!(f, "\n  witness: {w}")?;
        }
        Ok(())
    }
}

struct Tally(LemmaCheck);

impl Tally {
    fn new(suite: &'static str, lemma: &str) -> Self {
        Tally(LemmaCheck {
            suite,
            lemma: lemma.to_string(),
            instances: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
            witness: None,
            note: String::new(),
        })
    }

    /// Records `lhs <= rhs`; `rhs` already contains any slack.
    fn le(&mut self, lhs: f64, rhs: f64, witness: impl FnOnce() -> String) {
        let t = &mut self.0;
        t.instances += 1;
        let excess = lhs - rhs;
        t.worst_excess = t.worst_excess.max(if excess.is_nan() { f64::INFINITY } else { excess });
        if !(excess <= 0.0) {
            t.violations += 1;
            if t.witness.is_none() {
                t.witness = Some(format!("{} lhs={} rhs={}", witness(), sci(lhs), sci(rhs)));
            }
        }
    }

    fn holds(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.le(if ok { 0.0 } else { 1.0 }, 0.0, witness);
    }

    fn note(mut self, note: String) -> Self {
        self.0.note = note;
        self
    }

    fn done(self) -> LemmaCheck {
        self.0
    }
}

/// Runs one suite; every random instance draws from `seed` forked by suite
/// and streamed by instance index.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<LemmaCheck>> {
    let base = RngSeed::new(seed);
    let salt =
        SUITES.iter().position(|&s| s == name).ok_or_else(|| Error::OutOfRange(format!("unknown suite '{name}'")))?;
    let seed = base.fork(salt as u64 + 1);
    match name {
        "metrics" => metrics(seed),
        "entropy" => entropy(seed),
        "sdp" => sdp(seed),
        "correlations" => correlations(seed),
        "mps" => mps(seed),
        "expander" => expander(seed),
        "decoupling" => decoupling(seed),
        "povm" => povm(seed),
        "merging" => merging(seed),
        "edc" => edc(seed),
        "theorem" => theorem(seed),
        "lemma1" => lemma1(seed),
        _ => unreachable!("suite list and dispatch agree"),
    }
}

fn random_state<R: Rng>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let rank = rng.random_range(1..=dim);
    random_density(dim, rank, rng)
}

fn single(m: ComplexMatrix) -> Result<DensityOperator> {
    DensityOperator::single(m)
}

fn bipartite(m: ComplexMatrix, da: usize, db: usize) -> Result<DensityOperator> {
    DensityOperator::new(m, TensorSpace::new(vec![da, db])?)
}

fn metrics(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let pairs = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i).rng();
            let d = rng.random_range(2..=8);
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<DensityOperator> {
                let m = random_state(d, rng);
                let t = if rng.random_bool(0.5) { rng.random_range(0.5..1.0) } else { 1.0 };
                single(m * c(t, 0.0))
            };
            let rho = draw(&mut rng)?;
            let sigma = draw(&mut rng)?;
            Ok((d, d1_distance(&rho, &sigma)?, purified_distance(&rho, &sigma)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lower = Tally::new("metrics", "D1 <= D");
    let mut upper = Tally::new("metrics", "D <= sqrt(2 D1)");
    for (i, &(d, d1, pd)) in pairs.iter().enumerate() {
        lower.le(d1, pd + SLACK, || format!("pair stream={i} dim={d}"));
        upper.le(pd, (2.0 * d1).sqrt() + SLACK, || format!("pair stream={i} dim={d}"));
    }
    let triples = (0..300u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.fork(1).stream(i).rng();
            let d = rng.random_range(2..=6);
            let r = single(random_state(d, &mut rng))?;
            let s = single(random_state(d, &mut rng))?;
            let t = single(random_state(d, &mut rng))?;
            Ok((purified_distance(&r, &t)?, purified_distance(&r, &s)? + purified_distance(&s, &t)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tri = Tally::new("metrics", "purified distance triangle inequality");
    for (i, &(direct, via)) in triples.iter().enumerate() {
        tri.le(direct, via + SLACK, || format!("triple stream={i}"));
    }
    Ok(vec![lower.done(), upper.done(), tri.done()])
}

fn entropy(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let mut out = Vec::new();

    // Fannes: pairs drawn near each other so most land in D <= 1/2
    let fannes = (0..1500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i).rng();
            let d = rng.random_range(2..=8);
            let rho = random_state(d, &mut rng);
            let t = rng.random_range(0.0..0.6);
            let sigma = &rho * c(1.0 - t, 0.0) + random_state(d, &mut rng) * c(t, 0.0);
            let (rho, sigma) = (single(rho)?, single(sigma)?);
            let gap = (von_neumann(&rho)? - von_neumann(&sigma)?).abs();
            Ok((d, gap, d1_distance(&rho, &sigma)?, purified_distance(&rho, &sigma)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = |d: usize, t: f64| ((d - 1) as f64).log2() * t + binary_entropy(t);
    for (label, pick) in [("Fannes with trace distance", 0usize), ("Fannes with purified distance", 1)] {
        let mut tally = Tally::new("entropy", label);
        for (i, &(d, gap, d1, pd)) in fannes.iter().enumerate() {
            let dist = if pick == 0 { d1 } else { pd };
            if dist <= 0.5 {
                tally.le(gap, bound(d, dist) + SLACK, || format!("pair stream={i} dim={d} distance={}", sci(dist)));
            }
        }
        out.push(tally.done());
    }

    let sub = (0..600u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.fork(1).stream(i).rng();
            let (da, db) = (rng.random_range(2..=4), rng.random_range(2..=4));
            let rho = bipartite(random_state(da * db, &mut rng), da, db)?;
            let (e, e1, e2) = (rng.random_range(0.01..0.2), rng.random_range(0.01..0.2), rng.random_range(0.01..0.2));
            let lhs = hmax_smooth(&rho, e + e1 + 2.0 * e2)?.value_lower;
            let rhs = hmax_smooth(&rho.partial_trace(&[0])?, e1)?.value_upper
                + hmax_smooth(&rho.partial_trace(&[1])?, e2)?.value_upper
                + (2.0 / (e * e)).log2();
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = Tally::new("entropy", "subadditivity of smooth H_max");
    for (i, &(lhs, rhs)) in sub.iter().enumerate() {
        tally.le(lhs, rhs + SLACK, || format!("state stream={i}"));
    }
    out.push(tally.done());

    let qep = (0..600u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.fork(2).stream(i).rng();
            let p: f64 = rng.random_range(0.0..1.0);
            let n = rng.random_range(1..=12usize);
            let eps = if rng.random_bool(0.5) { 0.01 } else { 0.1 };
            let mut spectrum: Vec<f64> = (0..1usize << n)
                .map(|k| p.powi(k.count_ones() as i32) * (1.0 - p).powi((n as u32 - k.count_ones()) as i32))
                .collect();
            spectrum.sort_by(|a, b| b.total_cmp(a));
            let lhs = hmax_smooth_spectrum(&spectrum, eps)?.value_lower;
            let rhs = n as f64 * binary_entropy(p) + 8.0 * (n as f64 * (2.0 / (eps * eps)).log2()).sqrt();
            Ok((n, p, eps, lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = Tally::new("entropy", "quantum equipartition for qubit products");
    for &(n, p, eps, lhs, rhs) in &qep {
        tally.le(lhs, rhs + SLACK, || format!("n={n} p={} eps={eps}", sci(p)));
    }
    out.push(tally.done());

    let proj = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.fork(3).stream(i).rng();
            let d = rng.random_range(2..=16);
            let rho = single(random_state(d, &mut rng))?;
            let delta = rng.random_range(0.01..0.3);
            let rank = hmax_smooth(&rho, delta)?.value_upper.exp2().round() as usize;
            let mass: f64 = rho.spectrum().iter().take(rank).sum();
            Ok((delta, mass))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tally = Tally::new("entropy", "typical projector carries weight 1 - 2 delta");
    for (i, &(delta, mass)) in proj.iter().enumerate() {
        tally.le(1.0 - 2.0 * delta, mass + SLACK, || format!("state stream={i}"));
    }
    out.push(tally.done());
    Ok(out)
}

fn sdp(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    // most instances up to 8 x 8; the lopsided shapes at dimension 64 are slow
    // (their Newton systems reach |B|^2 = 1024) and appear once each
    let mut shapes: Vec<(usize, usize)> = (0..196u64)
        .map(|i| {
            let mut rng = seed.stream(i).rng();
            loop {
                let (a, b) = (rng.random_range(2..=8usize), rng.random_range(2..=8usize));
                if a * b <= 64 {
                    return (a, b);
                }
            }
        })
        .collect();
    shapes.extend([(2, 32), (32, 2), (4, 16), (16, 4)]);
    let sols = shapes
        .par_iter()
        .enumerate()
        .map(|(i, &(da, db))| {
            let mut rng = seed.fork(1).stream(i as u64).rng();
            let m = random_state(da * db, &mut rng);
            let sol = hmin_conditional(&bipartite(m.clone(), da, db)?, &[0])?;
            let (z, x, t) = sol.residuals(&m);
            Ok((da, db, sol.gap, z.min(x), t))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gap = Tally::new("sdp", "duality gap <= 1e-8");
    let mut feas = Tally::new("sdp", "certificates feasible");
    for (i, &(da, db, g, cone, tr)) in sols.iter().enumerate() {
        gap.le(g, 1e-8, || format!("instance={i} dims={da}x{db}"));
        feas.le(-cone + tr, SLACK, || format!("instance={i} dims={da}x{db}"));
    }

    let mut closed = Tally::new("sdp", "closed forms");
    let hmin_interval = |m: ComplexMatrix, da: usize, db: usize| -> Result<(f64, f64)> {
        let sol = hmin_conditional(&bipartite(m, da, db)?, &[0])?;
        Ok((sol.hmin(), sol.hmin_upper()))
    };
    for d in 2..=8usize {
        let psi = max_entangled_ac(d, 1)?;
        let rho = psi.reduced(&[0, 2])?;
        let (lo, hi) = hmin_interval(rho.matrix().clone(), d, d)?;
        let want = -(d as f64).log2();
        closed.le((lo - want).abs().max((hi - want).abs()), 1e-6, || format!("maximally entangled d={d}"));
    }
    let mut rng = seed.fork(2).rng();
    for k in 0..20 {
        let (da, db) = (rng.random_range(2..=4usize), rng.random_range(2..=4usize));
        let ra = random_state(da, &mut rng);
        let rb = random_state(db, &mut rng);
        let want = -linalg::eigvalsh(&ra)[0].log2();
        let (lo, hi) = hmin_interval(linalg::kron(&ra, &rb), da, db)?;
        closed.le((lo - want).abs().max((hi - want).abs()), 1e-6, || format!("product k={k} dims={da}x{db}"));
        let (lo, hi) = hmin_interval(ra.clone(), da, 1)?;
        closed.le((lo - want).abs().max((hi - want).abs()), 1e-6, || format!("trivial B k={k} dim={da}"));
    }
    Ok(vec![gap.done(), feas.done(), closed.done()])
}

fn bell() -> Result<ComplexMatrix> {
    Ok(max_entangled_ac(2, 1)?.reduced(&[0, 2])?.matrix().clone())
}

fn correlations(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let runs = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i).rng();
            let m = random_state(16, &mut rng);
            let delta = delta_operator(&m, 4, 4);
            let norm = linalg::trace_norm(&linalg::hermitize(&delta));
            let hiding = datahiding_witness(&delta, 4, 4).iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
            let opts = CorOptions { seed: seed.fork(1).stream(i), ..CorOptions::default() };
            let est = correlation_estimate_split(&m, 4, 4, &opts)?;
            Ok((norm, hiding, est.lower, est.reevaluate(&delta)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hide = Tally::new("correlations", "data-hiding witness >= ||Delta||_1 / 16");
    let mut low = Tally::new("correlations", "estimate lower >= data-hiding witness");
    let mut up = Tally::new("correlations", "estimate lower <= ||Delta||_1");
    let mut re = Tally::new("correlations", "reported lower re-evaluates");
    for (i, &(norm, hiding, lower, again)) in runs.iter().enumerate() {
        let w = || format!("state stream={i}");
        hide.le(norm / 16.0, hiding + SLACK, w);
        low.le(hiding, lower + SLACK, w);
        up.le(lower, norm + SLACK, w);
        re.le((lower - again).abs(), 1e-12, w);
    }
    let m = bell()?;
    let delta = delta_operator(&m, 2, 2);
    let z = diag_real(&[1.0, -1.0]);
    let mut bell_check = Tally::new("correlations", "Bell pair reaches 1 with Z (x) Z");
    bell_check.le(1.0, witness_value(&delta, &z, &z, 2, 2) + SLACK, || "witness diag(1,-1) (x) diag(1,-1)".into());
    let est = correlation_estimate_split(&m, 2, 2, &CorOptions { seed, ..CorOptions::default() })?;
    bell_check.le(1.0, est.lower + SLACK, || "alternating estimate".into());
    Ok(vec![hide.done(), low.done(), up.done(), re.done(), bell_check.done()])
}

/// Checks `||rho_AC - rho_A (x) rho_C||_1 <= D eta^l` on the open chain with
/// maximally mixed boundary, for `A` a left block and `C` everything beyond
/// separation `l`.
fn transfer_bound_rows(mps: &MatrixProductState) -> Result<Vec<(usize, usize, f64, f64)>> {
    let n = mps.num_sites();
    let psi = mps.open_boundary_state()?;
    let mut jobs = Vec::new();
    for l in 1..n.saturating_sub(1) {
        for r in 1..n - l {
            jobs.push((l, r));
        }
    }
    // sites are factors 1..=n, the virtual legs are 0 and n + 1
    jobs.par_iter()
        .map(|&(l, r)| {
            let x: Vec<usize> = (1..=r).collect();
            let y: Vec<usize> = (r + l + 1..=n).collect();
            Ok((l, r, delta_upper_pure(&psi, &x, &y)?, mps_correlation_bound(mps, l)?))
        })
        .collect()
}

fn mps(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let aklt = aklt_mps(9)?;
    let spec = transfer_operator(&aklt.channel(0)?)?;
    let mut moduli = Tally::new("mps", "AKLT transfer moduli {1, 1/3, 1/3, 1/3}");
    let want = [1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];
    moduli.holds(spec.eigenvalue_moduli.len() == 4, || format!("moduli {:?}", spec.eigenvalue_moduli));
    for (k, (&got, &w)) in spec.eigenvalue_moduli.iter().zip(&want).enumerate() {
        moduli.le((got - w).abs(), 1e-8, || format!("modulus {k}"));
    }

    let mut aklt_bound = Tally::new("mps", "AKLT Cor <= D eta^l");
    for (l, r, upper, bound) in transfer_bound_rows(&aklt)? {
        aklt_bound.le(upper, bound + SLACK, || format!("aklt n=9 A=[1,{r}] l={l}"));
    }
    let samples = (0..20u64)
        .into_par_iter()
        .map(|s| {
            let sample = expander_state(2, 3, 10, seed.stream(s))?;
            transfer_bound_rows(&sample.mps)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut exp_bound = Tally::new("mps", "expander Cor <= D eta^l");
    for (s, rows) in samples.iter().enumerate() {
        for &(l, r, upper, bound) in rows {
            exp_bound.le(upper, bound + SLACK, || format!("expander d=2 D=3 n=10 stream={s} A=[1,{r}] l={l}"));
        }
    }
    Ok(vec![moduli.done(), aklt_bound.done(), exp_bound.done()])
}

fn expander(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let mut grid = Vec::new();
    for d in [2usize, 3] {
        for bond in [2usize, 3, 4] {
            for l in 1..=3usize {
                for s in 0..3u64 {
                    grid.push((d, bond, l, s));
                }
            }
        }
    }
    let rows = grid
        .par_iter()
        .map(|&(d, bond, l, s)| {
            let ch = expander_state(d, bond, 2, seed.fork((d * 100 + bond) as u64).stream(s))?.channel;
            Ok((expander_purity(&ch, l, PurityMode::Channel)?, expander_purity_dense(&ch, l)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ident = Tally::new("expander", "channel purity formula equals dense tr rho_l^2");
    for (&(d, bond, l, s), &(a, b)) in grid.iter().zip(&rows) {
        ident.le((a - b).abs(), 1e-10, || format!("d={d} D={bond} l={l} stream={s}"));
    }

    let (d, bond, samples) = (2usize, 4usize, 20u64);
    let ls: Vec<usize> = (1..=8).collect();
    let channels = (0..samples)
        .into_par_iter()
        .map(|s| Ok(expander_state(d, bond, 2, seed.fork(7).stream(s))?.channel))
        .collect::<Result<Vec<_>>>()?;
    let mut ks = Vec::new();
    for &l in &ls {
        let purities =
            channels.par_iter().map(|ch| expander_purity(ch, l, PurityMode::Channel)).collect::<Result<Vec<_>>>()?;
        let mean = purities.iter().sum::<f64>() / samples as f64;
        ks.push((mean - 1.0 / (bond * bond) as f64) * (d as f64).powi(l as i32) / l as f64);
    }
    let k = ks.iter().copied().fold(0.0, f64::max);
    let mut exist = Tally::new("expander", "mean purity <= 1/D^2 + k l / d^l with k <= 10");
    exist.le(k, 10.0, || format!("d=2 D=4 l=1..8 samples=20 k_l={:?}", ks.iter().map(|&v| sci(v)).collect::<Vec<_>>()));
    Ok(vec![ident.done(), exist.done().with_note(format!("smallest k = {}", sci(k)))])
}

impl LemmaCheck {
    fn with_note(mut self, note: String) -> Self {
        self.note = note;
        self
    }
}

fn decoupling(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let mut out = Vec::new();
    let mut haar = Tally::new("decoupling", "Haar mean D(rho_B, tau_B) <= (2|B|/|A|)^(1/4)");
    let mut notes = Vec::new();
    for (k, (da, db, samples)) in
        [(64, 4, 200), (256, 4, 200), (16, 2, 50), (32, 8, 50), (64, 16, 50), (128, 2, 50)].into_iter().enumerate()
    {
        let r = haar_decoupling_experiment(da, db, samples, seed.fork(k as u64))?;
        haar.le(r.mean, r.bound, || format!("|A|={da} |B|={db} samples={samples} fork={k}"));
        if k < 2 {
            notes.push(format!("{da}x{db}: mean {} bound {}", sci(r.mean), sci(r.bound)));
        }
    }
    out.push(haar.done().with_note(notes.join("; ")));
    let r = haar_decoupling_experiment(8, 1, 10, seed.fork(99))?;
    let mut trivial = Tally::new("decoupling", "trivial B is decoupled");
    for (i, &d) in r.distances.iter().enumerate() {
        trivial.le(d, 1e-7, || format!("sample={i}"));
    }
    out.push(trivial.done());
    Ok(out)
}

fn povm(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let runs = (0..100u64)
        .into_par_iter()
        .map(|s| {
            let psi = haar_tripartite((4, 2, 4), seed.stream(s))?;
            decoupling_merging_experiment(&psi, 2, 10, seed.fork(1).stream(s))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut lemma = Tally::new("povm", "best decoupling error <= 2 sqrt(L|B| tr rho_AB^2) + 2L/|A|");
    for (s, r) in runs.iter().enumerate() {
        lemma.le(r.best, r.bound + SLACK, || format!("state stream={s} L=2 families=10"));
    }
    let mut family = Tally::new("povm", "rank-L families complete and orthogonal");
    for s in 0..50u64 {
        let mut rng = seed.fork(2).stream(s).rng();
        let dim = rng.random_range(1..=16usize);
        let l = rng.random_range(1..=dim);
        let f = random_rank_povm(dim, l, seed.fork(3).stream(s))?;
        let ranks_ok = f.ranks.iter().sum::<usize>() == dim && f.ranks[..dim / l].iter().all(|&r| r == l);
        family.holds(ranks_ok, || format!("dim={dim} L={l} ranks={:?}", f.ranks));
        family.le(f.completeness_residual.max(f.orthogonality_residual()), 1e-10, || {
            format!("dim={dim} L={l} stream={s}")
        });
    }
    Ok(vec![lemma.done(), family.done()])
}

fn merging(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let mut t = Tally::new("merging", "rate report closed forms");
    let product = crate::states::PureState::new(
        {
            let mut v = crate::ComplexVector::zeros(8);
            v[0] = linalg::ONE;
            v
        },
        TensorSpace::uniform(3, 2)?,
    )?;
    let r = merging_rate_report(&product, 0.01)?;
    t.le((r.log_n_bound - r.overhead()).abs(), 1e-6, || "product state log N".into());
    for d in 2..=4usize {
        let r = merging_rate_report(&max_entangled_ac(d, 1)?, 0.01)?;
        let want = (d as f64).log2();
        let err = (-r.hmax_a_given_c.value_lower - want).abs().max((-r.hmax_a_given_c.value_upper - want).abs());
        t.le(err, 1e-6, || format!("maximally entangled d={d}"));
    }
    let g = ghz(3)?;
    let r = merging_rate_report(g.pure(), 0.01)?;
    t.le((r.hmax_a.value_upper - 1.0).abs(), 1e-12, || "GHZ H_max(A)".into());
    for e in [&r.hmin_a_given_b, &r.hmax_a_given_c] {
        t.le(e.value_lower.abs().max(e.value_upper.abs()), 1e-6, || "GHZ conditional entropies".into());
    }
    let mut repro = Tally::new("merging", "report reproducible from ingredients");
    for s in 0..10u64 {
        let psi = haar_tripartite((2, 2, 4), seed.stream(s))?;
        let r = merging_rate_report(&psi, 0.05)?;
        let (n, ls, lr) = r.recomputed();
        repro.holds(n == r.log_n_bound && ls == r.log_l_bound_as_stated && lr == r.log_l_bound_rate, || {
            format!("stream={s}")
        });
    }
    Ok(vec![t.done(), repro.done()])
}

/// Sites `{0,1}` against `{3..=10}` on a twelve-site ring; sites 11 and 2
/// are the buffer.
pub fn haar_partition() -> (Vec<usize>, Vec<usize>) {
    (vec![0, 1], (3..=10).collect())
}

pub fn haar_partition_cor(seed: RngSeed) -> Result<f64> {
    let st = haar_chain(12, 2, seed)?;
    let (a, c_sites) = haar_partition();
    let mut keep = a.clone();
    keep.extend(&c_sites);
    let rho = st.reduced(&keep)?;
    let est = correlation_estimate_split(
        rho.matrix(),
        1 << a.len(),
        1 << c_sites.len(),
        &CorOptions { seed, ..CorOptions::default() },
    )?;
    Ok(est.lower)
}

fn edc(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let g = ghz(10)?;
    let opts = EdcOptions::for_state(&g);
    let mut grid = Vec::new();
    for xi in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0] {
        for l0 in 1..=3usize {
            grid.push((xi, l0));
        }
    }
    let verdicts = grid.par_iter().map(|&(xi, l0)| edc_certify(&g, xi, l0, &opts)).collect::<Result<Vec<_>>>()?;
    let mut ghz_fail = Tally::new("edc", "GHZ(10) violates every (xi <= 4, l0 <= 3) with a strict witness");
    for (&(xi, l0), cert) in grid.iter().zip(&verdicts) {
        let strict = match &cert.verdict {
            Verdict::Violated(v) => v.lower() > v.bound,
            _ => false,
        };
        ghz_fail.holds(strict, || format!("xi={xi} l0={l0} verdict={:?}", cert.verdict));
    }

    let tfim = tfim_groundstate(12, 2.0)?;
    let opts = EdcOptions::for_state(&tfim.state);
    let fit = decay_fit(&tfim.state, opts.region_cap, &opts.cor)?;
    let cert = edc_certify(&tfim.state, fit.xi, fit.l0, &opts)?;
    let mut tfim_pass = Tally::new("edc", "TFIM(12, h=2) certifies with its fitted (xi, l0)");
    tfim_pass.holds(cert.is_certified(), || format!("xi={} l0={} verdict={:?}", sci(fit.xi), fit.l0, cert.verdict));

    let lowers = (0..10u64).into_par_iter().map(|s| haar_partition_cor(seed.stream(s))).collect::<Result<Vec<_>>>()?;
    let mut haar = Tally::new("edc", "Haar 12-qubit states: Cor(A:C) >= 0.2");
    for (s, &v) in lowers.iter().enumerate() {
        haar.le(COR_THRESHOLD, v, || format!("haar_chain(12, 2) stream={s}"));
    }
    let min = lowers.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(vec![
        ghz_fail.done(),
        tfim_pass.done().with_note(format!("xi={} l0={}", sci(fit.xi), fit.l0)),
        haar.done().with_note(format!("smallest lower bound {}", sci(min))),
    ])
}

fn theorem(_seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    let tfim = tfim_groundstate(12, 2.0)?;
    let opts = EdcOptions::for_state(&tfim.state);
    let fit = decay_fit(&tfim.state, opts.region_cap, &opts.cor)?;
    let cert = edc_certify(&tfim.state, fit.xi, fit.l0, &opts)?;
    let table = theorem_harness(&tfim.state, &cert, &HarnessOptions::default())?;
    let mut sat = Tally::new("theorem", "TFIM block entropies agree to 0.1 bit between sizes 4 and 6");
    let ls: Vec<usize> = {
        let mut v: Vec<usize> = table.rows.iter().map(|r| r.l).collect();
        v.dedup();
        v
    };
    for &l in &ls {
        let best = |len: usize| {
            table
                .rows
                .iter()
                .filter(|r| r.l == l && r.block_len == len)
                .map(|r| r.hmax_upper)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        sat.le((best(6) - best(4)).abs(), 0.1, || format!("l={l}"));
    }
    sat.holds(table.saturated, || format!("saturation gap {}", sci(table.saturation_gap)));
    let again = theorem_harness(&tfim.state, &cert, &HarnessOptions::default())?;
    let mut det = Tally::new("theorem", "table deterministic");
    det.holds(again.rows == table.rows, || "two runs differ".into());

    let mixed = MixedChain::maximally_mixed(8, 2, Topology::Ring)?;
    let mcert = edc_certify(&mixed, 0.5, 1, &EdcOptions::for_state(&mixed))?;
    let mtable = theorem_harness(&mixed, &mcert, &HarnessOptions::default())?;
    let mut norm = Tally::new("theorem", "maximally mixed passes only when normalized by H_max(rho)");
    norm.holds(mcert.is_certified(), || "maximally mixed state not certified".into());
    norm.holds(!mtable.saturated && mtable.normalized_ok, || {
        format!(
            "raw saturated={} normalized={} gap={}",
            mtable.saturated,
            mtable.normalized_ok,
            sci(mtable.saturation_gap)
        )
    });

    let prod = product_zero(8, 2)?;
    let pcert = edc_certify(&prod, 0.5, 1, &EdcOptions::for_state(&prod))?;
    let ptable = theorem_harness(&prod, &pcert, &HarnessOptions::default())?;
    let mut zero = Tally::new("theorem", "product state table is zero");
    zero.holds(ptable.rows.iter().all(|r| r.hmax_upper == 0.0), || "non-zero entry".into());
    Ok(vec![
        sat.done().with_note(format!("xi={} l0={} rows={}", sci(fit.xi), fit.l0, table.rows.len())),
        det.done(),
        norm.done().with_note(format!("H_max(rho)={} raw gap={}", sci(mtable.hmax_state), sci(mtable.saturation_gap))),
        zero.done(),
    ])
}

/// `|000> + t |g>` normalized, `g` Haar on (4,2,4), `t` uniform in [0.01, 0.15].
fn perturbed_product(seed: RngSeed) -> Result<crate::states::PureState> {
    let mut rng = seed.rng();
    let t = rng.random_range(0.01..0.15);
    let mut v = linalg::haar_state_with(32, &mut rng)? * c(t, 0.0);
    v[0] += c(1.0, 0.0);
    let v = v.normalize();
    crate::states::PureState::new(v, TensorSpace::new(vec![4, 2, 4])?)
}

fn lemma1(seed: RngSeed) -> Result<Vec<LemmaCheck>> {
    // Haar (4,2,4) states have Cor(A:C) near 1/2 or above, hence gamma >= 1
    // and nothing to assert. Cor shrinks like sqrt(|A||C|/|B|), so wide-B
    // states and weak perturbations of a product reach 0 < 2 gamma < 1.
    type Family = fn(RngSeed) -> Result<crate::states::PureState>;
    let families: [(&str, Family); 3] = [
        ("haar (4,2,4)", |s| haar_tripartite((4, 2, 4), s)),
        ("haar (2,256,2)", |s| haar_tripartite((2, 256, 2), s)),
        ("perturbed product (4,2,4)", perturbed_product),
    ];
    let mut part3 =
        Tally::new("lemma1", "H_max^{2 gamma}(A) <= H_max^delta(A) + 2 log|B| + log(2/gamma^2), delta=0.01");
    let mut breakdown = Vec::new();
    for (f, (label, make)) in families.iter().enumerate() {
        let count = if f == 0 { 200 } else { 100 };
        let reports = (0..count as u64)
            .into_par_iter()
            .map(|s| {
                let psi = make(seed.fork(10 + f as u64).stream(s))?;
                lemma1_part3_check(
                    &psi,
                    0.01,
                    &CorOptions { seed: seed.fork(1).stream(1000 * f as u64 + s), ..CorOptions::default() },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let (mut asserted, mut trivial) = (0, 0);
        for (s, r) in reports.iter().enumerate() {
            if r.skipped() {
                continue;
            }
            asserted += 1;
            trivial += r.trivial as usize;
            part3.le(r.lhs, r.rhs + SLACK, || format!("{label} stream={s} gamma={}", sci(r.gamma.unwrap_or(f64::NAN))));
        }
        breakdown.push(format!("{label}: {asserted}/{count} asserted, {trivial} of them with 2 gamma >= 1"));
    }
    let part3 = part3.note(breakdown.join("; ")).done();

    let wit = (0..200u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = seed.fork(2).stream(s).rng();
            let (da, dc) = (rng.random_range(2..=4usize), rng.random_range(2..=4usize));
            let rho = random_state(da * dc, &mut rng);
            let m = random_density(da, da, &mut rng);
            let m = &m * c(1.0 / linalg::operator_norm(&m), 0.0);
            let w = cor_lower_from_measurement(&rho, da, &m)?;
            let norm = linalg::trace_norm(&linalg::hermitize(&delta_operator(&rho, da, dc)));
            Ok((w, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cor_norm = Tally::new("lemma1", "(p/2) D(rho~_C, rho_C)^2 <= measured witness <= Cor upper");
    for (s, (w, norm)) in wit.iter().enumerate() {
        cor_norm.le(w.purified_bound, w.witness_value + SLACK, || format!("stream={s}"));
        cor_norm.le(w.witness_value, norm + SLACK, || format!("stream={s}"));
    }
    let b = cor_lower_from_measurement(&bell()?, 2, &diag_real(&[1.0, 0.0]))?;
    cor_norm.le((b.purified_bound - 0.125).abs(), 1e-10, || "Bell pair with |0><0|".into());

    let demo = lemma1_random_measurement_demo(
        &max_entangled_ac(2, 1)?,
        DemoParams { delta: 0.01, nu: 0.01, projector_rank: 1, samples: 100 },
        seed.fork(3),
    )?;
    let mut mech = Tally::new("lemma1", "random rank-1 measurement creates Cor >= 0.2 in half the samples");
    mech.le(0.5, demo.fraction_at_least(COR_THRESHOLD), || "maximally entangled qubits, 100 samples".into());
    Ok(vec![
        part3,
        cor_norm.done(),
        mech.done().with_note(format!("alpha={} close fraction={}", sci(demo.alpha), sci(demo.close_fraction))),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_records_first_witness() {
        let mut t = Tally::new("metrics", "x");
        t.le(0.0, 1.0, || "a".into());
        t.le(2.0, 1.0, || "b".into());
        t.le(3.0, 1.0, || "c".into());
        let c = t.done();
        assert_eq!((c.instances, c.violations), (3, 2));
        assert!(c.witness.unwrap().starts_with("b "));
        assert_eq!(c.worst_excess, 2.0);
        assert!(!Tally::new("metrics", "empty").done().passed());
    }

    #[test]
    fn nan_counts_as_violation() {
        let mut t = Tally::new("metrics", "x");
        t.le(f64::NAN, 1.0, || "nan".into());
        assert!(!t.done().passed());
    }

    #[test]
    fn metrics_suite_passes() {
        let lines = run_suite("metrics", 7).unwrap();
        assert!(lines.iter().all(|l| l.passed()), "{lines:?}");
        assert_eq!(lines[0].instances, 1000);
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 1).is_err());
    }
}
