//! `corrlab`: reproducible experiments on correlation decay, smooth entropies
//! and area laws. Every command writes CSV (or, for `verify`, one summary
//! line per lemma). Exit status: 0 on success, 1 when an asserted property
//! fails (the witness goes to stderr), 2 on usage errors.

mod commands;
mod config;
mod fixture;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use corrlab::protocols::Geometry;
use corrlab::states::Topology;

#[derive(Parser, Debug)]
#[command(name = "corrlab", version, about = "Correlation decay, smooth entropies and area laws on small chains")]
#[command(args_override_self = true)]
pub struct Cli {
    /// File of key=value lines using the same names as the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; all randomness derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Write a state fixture in the chainstate text format.
    Gen {
        #[arg(long)]
        state: String,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Bounds on Cor(X:Y) between two site sets.
    Cor {
        #[arg(long)]
        state: String,
        /// Sites of X, e.g. `0,1` or `0-2`.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Entropy intervals of region A (and conditional on B).
    Entropy {
        #[arg(long)]
        state: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: Option<String>,
        /// Smoothing parameter for H_max.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Certify (xi, l0)-exponential decay of correlations.
    EdcCertify {
        #[arg(long)]
        state: String,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        l0: Option<usize>,
        /// Fit (xi, l0) to the measured decay before certifying.
        #[arg(long)]
        fit: bool,
        /// Largest region size per side (default: the dimension budget).
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Transfer gap and block purity of sampled quantum expander states.
    Expander {
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Bond dimension D.
        #[arg(long, default_value_t = 3)]
        bond: usize,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        lmax: usize,
    },
    /// Haar decoupling: D(rho_B, tau_B) after a random unitary on AB.
    Decouple {
        #[arg(long = "dimA")]
        dim_a: usize,
        #[arg(long = "dimB")]
        dim_b: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Random-POVM decoupling errors, or one-shot merging rates.
    Merge {
        #[arg(long, default_value = "haar:4,2,4")]
        state: String,
        /// POVM outcomes of rank |A|/L.
        #[arg(long = "L", default_value_t = 2)]
        outcomes: usize,
        #[arg(long, default_value_t = 10)]
        povm_samples: usize,
        /// Emit the merging rate bounds at this epsilon instead.
        #[arg(long)]
        rates: Option<f64>,
    },
    /// Search for a scale where I(X_C : X_L X_R) <= eps * l.
    Saturate {
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        l0: usize,
        /// Site the scan is centred on.
        #[arg(long, default_value_t = 0)]
        s: usize,
        #[arg(long, default_value_t = Geometry::AppendixB)]
        geometry: Geometry,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Block max-entropy table under a certified decay of correlations.
    Theorem {
        #[arg(long)]
        state: String,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long)]
        l0: Option<usize>,
        #[arg(long)]
        fit: bool,
        #[arg(long)]
        cap: Option<usize>,
        /// Saturation tolerance in bits.
        #[arg(long, default_value_t = 0.1)]
        tol: f64,
        #[arg(long)]
        max_l: Option<usize>,
        #[arg(long)]
        topology: Option<Topology>,
    },
    /// Run lemma suites and print one summary line per lemma.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    /// An asserted property failed; the message carries the witness.
    Assertion(String),
    Runtime(corrlab::Error),
}

impl From<corrlab::Error> for Failure {
    fn from(e: corrlab::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn parse_args(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    // Required flags may live in the config file, so it is located by a
    // plain scan and spliced in before clap sees the arguments.
    let Some((path, name)) = config::locate(&Cli::command(), &argv) else {
        return Cli::try_parse_from(argv);
    };
    let usage = |msg: String| Cli::command().error(clap::error::ErrorKind::ValueValidation, msg);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Cli::command().error(clap::error::ErrorKind::Io, format!("cannot read config {}: {e}", path.display()))
    })?;
    let entries = config::parse_lines(&text).map_err(|f| usage(f.to_string()))?;
    let spliced = config::splice(&Cli::command(), &argv, &name, &entries).map_err(|f| usage(f.to_string()))?;
    Cli::try_parse_from(spliced)
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Assertion(m) => f.write_str(m),
            Failure::Runtime(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.output {
        Some(path) => match File::create(path) {
            Ok(f) => {
                let mut w = BufWriter::new(f);
                commands::run(&cli, &mut w).and_then(|()| w.flush().map_err(Failure::from))
            }
            Err(e) => Err(Failure::Usage(format!("cannot create {}: {e}", path.display()))),
        },
        None => {
            let mut w = io::stdout().lock();
            commands::run(&cli, &mut w).and_then(|()| w.flush().map_err(Failure::from))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Assertion(m)) => {
            eprintln!("FAIL: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
