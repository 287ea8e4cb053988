use std::io::Write;

use corrlab::correlations::{
    correlation_estimate, decay_fit, edc_certify, transfer_operator, CorOptions, DecayCertificate, EdcOptions, Verdict,
    Violation, WitnessSource,
};
use corrlab::csv::{decay_table, decoupling_table, merging_table, sci, theorem_table, Table};
use corrlab::entropy::{hmax_smooth, hmin_report, mutual_information, von_neumann};
use corrlab::protocols::{
    decoupling_merging_experiment, haar_decoupling_experiment, merging_rate_report, saturation_scan, theorem_harness,
    HarnessOptions,
};
use corrlab::states::{expander_purity, expander_state, write_chainstate, PurityMode, SiteState, Topology};
use corrlab::verify::{run_suite, SUITES};
use corrlab::{ComplexMatrix, RngSeed};
use rayon::prelude::*;

use crate::fixture::{self, parse_sites, Fixture};
use crate::{Cli, Cmd, Failure};

/// Salt separating fixture randomness from experiment randomness.
const FIXTURE_SALT: u64 = 0xF1;

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let seed = RngSeed::new(cli.seed);
    let state = |spec: &str, topology: Option<Topology>| fixture::parse(spec, seed.fork(FIXTURE_SALT), topology);
    let cor_opts = CorOptions { seed, ..CorOptions::default() };
    match &cli.command {
        Cmd::Gen { state: spec, topology } => match state(spec, *topology)? {
            Fixture::Pure(chain) => Ok(write_chainstate(out, &chain)?),
            _ => Err(Failure::Usage("gen writes pure chain fixtures only".into())),
        },
        Cmd::Cor { state: spec, x, y, restarts, topology } => {
            let fx = state(spec, *topology)?;
            let st = fx.sites()?;
            let (xs, ys) = (parse_sites(x)?, parse_sites(y)?);
            if xs.iter().any(|s| ys.contains(s)) {
                return Err(Failure::Usage("X and Y overlap".into()));
            }
            let mut sites = xs.clone();
            sites.extend(&ys);
            let rho = st.reduced(&sites)?;
            let x_factors: Vec<usize> = (0..xs.len()).collect();
            let est = correlation_estimate(&rho, &x_factors, &CorOptions { restarts: *restarts, ..cor_opts })?;
            let mut t = Table::new(&["x", "y", "cor_lower", "cor_upper", "source", "converged"]);
            let source = match est.source {
                WitnessSource::Alternating => "alternating",
                WitnessSource::DataHiding => "datahiding",
            };
            t.push(vec![
                join(&xs),
                join(&ys),
                sci(est.lower),
                sci(est.upper),
                source.into(),
                est.converged.to_string(),
            ]);
            Ok(t.write(out)?)
        }
        Cmd::Entropy { state: spec, a, b, eps, topology } => {
            let fx = state(spec, *topology)?;
            let st = fx.sites()?;
            let a_sites = parse_sites(a)?;
            let rho_a = st.reduced(&a_sites)?;
            let mut t = Table::new(&["quantity", "eps", "lower", "upper"]);
            let vn = von_neumann(&rho_a)?;
            t.push(vec!["S(A)".into(), sci(0.0), sci(vn), sci(vn)]);
            let hmax = hmax_smooth(&rho_a, *eps).map_err(|e| Failure::Usage(e.to_string()))?;
            t.push(vec!["Hmax(A)".into(), sci(*eps), sci(hmax.value_lower), sci(hmax.value_upper)]);
            if let Some(b) = b {
                let b_sites = parse_sites(b)?;
                if a_sites.iter().any(|s| b_sites.contains(s)) {
                    return Err(Failure::Usage("A and B overlap".into()));
                }
                let mut sites = a_sites.clone();
                sites.extend(&b_sites);
                let rho_ab = st.reduced(&sites)?;
                let a_factors: Vec<usize> = (0..a_sites.len()).collect();
                let b_factors: Vec<usize> = (a_sites.len()..sites.len()).collect();
                let hmin = hmin_report(&rho_ab, &a_factors)?;
                t.push(vec!["Hmin(A|B)".into(), sci(0.0), sci(hmin.value_lower), sci(hmin.value_upper)]);
                let mi = mutual_information(&rho_ab, &a_factors, &b_factors)?;
                t.push(vec!["I(A:B)".into(), sci(0.0), sci(mi), sci(mi)]);
            }
            Ok(t.write(out)?)
        }
        Cmd::EdcCertify { state: spec, xi, l0, fit, cap, topology } => {
            let fx = state(spec, *topology)?;
            let st = fx.sites()?;
            let cert = certify(st, *xi, *l0, *fit, *cap, cor_opts)?;
            decay_table(&cert.samples, cert.xi).write(&mut *out)?;
            out.flush()?;
            verdict(st, &cert)
        }
        Cmd::Expander { d, bond, n, samples, lmax } => {
            let rows = (0..*samples as u64)
                .into_par_iter()
                .map(|s| {
                    let sample = expander_state(*d, *bond, *n, seed.stream(s))?;
                    let eta = transfer_operator(&sample.channel)?.eta;
                    (1..=*lmax)
                        .map(|l| {
                            let purity = expander_purity(&sample.channel, l, PurityMode::Channel)?;
                            Ok(vec![
                                s.to_string(),
                                l.to_string(),
                                sci(eta),
                                sci(purity),
                                sci(*bond as f64 * eta.powi(l as i32)),
                            ])
                        })
                        .collect::<corrlab::Result<Vec<_>>>()
                })
                .collect::<corrlab::Result<Vec<_>>>()?;
            let mut t = Table::new(&["sample", "l", "eta", "purity", "transfer_bound"]);
            rows.into_iter().flatten().for_each(|r| t.push(r));
            Ok(t.write(out)?)
        }
        Cmd::Decouple { dim_a, dim_b, samples } => {
            let r = haar_decoupling_experiment(*dim_a, *dim_b, *samples, seed)?;
            decoupling_table(&r).write(&mut *out)?;
            if r.holds {
                Ok(())
            } else {
                Err(Failure::Assertion(format!(
                    "Haar decoupling: mean distance {} exceeds (2|B|/|A|)^(1/4) = {}",
                    sci(r.mean),
                    sci(r.bound)
                )))
            }
        }
        Cmd::Merge { state: spec, outcomes, povm_samples, rates } => {
            let fx = state(spec, None)?;
            let psi = fx.tripartite()?;
            if let Some(eps) = rates {
                let r = merging_rate_report(psi, *eps).map_err(|e| Failure::Usage(e.to_string()))?;
                let mut t = Table::new(&["quantity", "lower", "upper"]);
                for (q, rep) in
                    [("Hmax(A)", &r.hmax_a), ("Hmin(A|B)", &r.hmin_a_given_b), ("Hmax(A|C)", &r.hmax_a_given_c)]
                {
                    t.push(vec![q.into(), sci(rep.value_lower), sci(rep.value_upper)]);
                }
                t.push(vec!["log_n_bound".into(), sci(r.log_n_bound), sci(r.log_n_bound)]);
                t.push(vec!["log_l_bound".into(), sci(r.log_l_bound_as_stated), sci(r.log_l_bound_as_stated)]);
                t.push(vec!["log_l_bound_rate".into(), sci(r.log_l_bound_rate), sci(r.log_l_bound_rate)]);
                t.push(vec!["error_bound".into(), sci(r.error_bound), sci(r.error_bound)]);
                return Ok(t.write(out)?);
            }
            let r = decoupling_merging_experiment(psi, *outcomes, *povm_samples, seed)?;
            merging_table(&r).write(&mut *out)?;
            if r.holds {
                Ok(())
            } else {
                Err(Failure::Assertion(format!(
                    "POVM decoupling: best error {} exceeds 2 sqrt(L|B| tr rho_AB^2) + 2L/|A| = {}",
                    sci(r.best),
                    sci(r.bound)
                )))
            }
        }
        Cmd::Saturate { state: spec, eps, l0, s, geometry, topology } => {
            let fx = state(spec, *topology)?;
            let st = fx.sites()?;
            let r = saturation_scan(st, *s, *eps, *l0, *geometry)?;
            let mut t = Table::new(&[
                "l",
                "left_start",
                "left_len",
                "centre_start",
                "centre_len",
                "right_start",
                "right_len",
                "mutual_info",
                "threshold",
                "met",
            ]);
            t.push(vec![
                r.l.to_string(),
                r.left.start.to_string(),
                r.left.length.to_string(),
                r.centre.start.to_string(),
                r.centre.length.to_string(),
                r.right.start.to_string(),
                r.right.length.to_string(),
                sci(r.mutual_info),
                sci(r.threshold),
                r.met.to_string(),
            ]);
            t.write(&mut *out)?;
            if r.met {
                Ok(())
            } else {
                Err(Failure::Assertion(format!(
                    "saturation not met after {} regions; smallest I(X_C : X_L X_R) = {} at l = {} (threshold {})",
                    r.regions_scanned,
                    sci(r.mutual_info),
                    r.l,
                    sci(r.threshold)
                )))
            }
        }
        Cmd::Theorem { state: spec, xi, l0, fit, cap, tol, max_l, topology } => {
            let fx = state(spec, *topology)?;
            let st = fx.sites()?;
            let cert = certify(st, *xi, *l0, *fit, *cap, cor_opts)?;
            if !cert.is_certified() {
                return verdict(st, &cert);
            }
            let table = theorem_harness(st, &cert, &HarnessOptions { saturation_tol: *tol, max_l: *max_l })?;
            theorem_table(&table).write(&mut *out)?;
            eprintln!(
                "xi={} l0={} saturation_gap={} saturated={} hmax_state={} normalized_ok={}",
                sci(table.xi),
                table.l0,
                sci(table.saturation_gap),
                table.saturated,
                sci(table.hmax_state),
                table.normalized_ok
            );
            let mixed = table.hmax_state > 0.0;
            if table.saturated || (mixed && table.normalized_ok) {
                Ok(())
            } else {
                Err(Failure::Assertion(format!(
                    "block max-entropies do not saturate: gap {} bits between block lengths {} and maximal{}",
                    sci(table.saturation_gap),
                    table.half_len,
                    if mixed { ", and some entry exceeds H_max(rho) + l" } else { "" }
                )))
            }
        }
        Cmd::Verify { suite } => {
            let names: Vec<&str> = if suite == "all" {
                SUITES.to_vec()
            } else if SUITES.contains(&suite.as_str()) {
                vec![suite.as_str()]
            } else {
                return Err(Failure::Usage(format!(
                    "unknown suite '{suite}' (expected all or one of {})",
                    SUITES.join(", ")
                )));
            };
            let mut failed = Vec::new();
            for name in names {
                match run_suite(name, cli.seed) {
                    Ok(checks) => {
                        for c in checks {
                            writeln!(out, "{c}")?;
                            if !c.passed() {
                                failed.push(format!("[{}] {}", c.suite, c.lemma));
                            }
                        }
                    }
                    Err(e) => {
                        writeln!(out, "[{name}] ERROR {e}")?;
                        failed.push(format!("[{name}] {e}"));
                    }
                }
                out.flush()?;
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Assertion(format!("{} check(s) failed: {}", failed.len(), failed.join("; "))))
            }
        }
    }
}

fn join(sites: &[usize]) -> String {
    sites.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn certify(
    st: &dyn SiteState,
    xi: Option<f64>,
    l0: Option<usize>,
    fit: bool,
    cap: Option<usize>,
    cor: CorOptions,
) -> Result<DecayCertificate, Failure> {
    let mut opts = EdcOptions { cor, ..EdcOptions::for_state(st) };
    if let Some(c) = cap {
        opts.region_cap = c;
    }
    let (xi, l0) = match (xi, l0, fit) {
        (Some(x), Some(l), false) => (x, l),
        (None, None, true) => {
            let f = decay_fit(st, opts.region_cap, &cor)?;
            eprintln!("fitted xi={} l0={}", sci(f.xi), f.l0);
            (f.xi, f.l0)
        }
        _ => return Err(Failure::Usage("give either --xi and --l0, or --fit".into())),
    };
    if !(xi > 0.0) {
        return Err(Failure::Usage(format!("xi must be positive, got {xi}")));
    }
    Ok(edc_certify(st, xi, l0, &opts)?)
}

fn verdict(st: &dyn SiteState, cert: &DecayCertificate) -> Result<(), Failure> {
    match &cert.verdict {
        Verdict::Certified => {
            eprintln!("certified: xi={} l0={} pairs={}", sci(cert.xi), cert.l0, cert.pairs_checked);
            Ok(())
        }
        Verdict::Violated(v) => Err(Failure::Assertion(format!(
            "correlations exceed 2^(-l/xi) (xi={}, l0={})\n{}",
            sci(cert.xi),
            cert.l0,
            describe(st, v)
        ))),
        Verdict::Indeterminate(v) => Err(Failure::Assertion(format!(
            "cannot certify (xi={}, l0={}): upper bound exceeds the envelope, no lower bound above it\n{}",
            sci(cert.xi),
            cert.l0,
            describe(st, v)
        ))),
    }
}

/// The violating pair plus the product observable realizing the lower bound,
/// so the value can be recomputed from the state.
fn describe(st: &dyn SiteState, v: &Violation) -> String {
    let xs = st.region_sites(&v.x).unwrap_or_default();
    let ys = st.region_sites(&v.y).unwrap_or_default();
    let mut s = format!(
        "  X=[{}] Y=[{}] l={} bound={} cor_lower={} cor_upper={}",
        join(&xs),
        join(&ys),
        v.separation,
        sci(v.bound),
        sci(v.lower()),
        sci(v.upper)
    );
    if let Some(e) = &v.estimate {
        if let Ok(re) = v.reevaluate(st) {
            s.push_str(&format!(" reevaluated={}", sci(re)));
        }
        s.push_str(&format!("\n  witness M = {}\n  witness N = {}", matrix(&e.witness_m), matrix(&e.witness_n)));
    }
    s
}

/// Row-major `re+imj` entries, rows separated by `;`.
fn matrix(m: &ComplexMatrix) -> String {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| format!("{}{:+}j", m[(i, j)].re, m[(i, j)].im)).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}
