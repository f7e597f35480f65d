//! `betalab`: batch experiments on beta-maps, Parry measures and Fourier decay.
//!
//! Every subcommand prints its result as JSON on stdout and writes the same
//! JSON, any CSV tables and a `manifest.json` under `<out>/<command>/`.
//! Exit status: 0 success, 1 usage error, 2 invariant violation, 3 precision
//! exhaustion.

mod commands;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use error::CliError;
use output::{resolve_out, write_artifacts, RunInfo};

#[derive(Parser, Debug)]
#[command(name = "betalab", version, about = "Certified beta-expansion and Fourier decay experiments")]
struct Cli {
    /// Artifact directory [default: $BETALAB_CACHE_DIR, else ./betalab-out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sample loops; 1 keeps runs byte-reproducible
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
enum Command {
    /// Classify b as simple / simple Parry / Parry / specified from the orbit of one
    Classify(ClassifyArgs),
    /// Greedy b-expansion of a point with certified orbit enclosures
    Expand(ExpandArgs),
    /// Parry density table, normalizer and Fourier coefficients
    Parry(ParryArgs),
    /// Certified orbit of T_b
    Orbit(OrbitArgs),
    /// Weyl sums S_N(m) along one orbit
    Weyl(WeylArgs),
    /// Mean limsup-proxy decay profile over source-generic seeds
    Decay(DecayArgs),
    /// Closed-form and grid-optimized decay exponent
    Exponent(ExponentArgs),
    /// Numerical check of the near-diagonal Fourier inequality
    Lemma32(Lemma32Args),
    /// Invariance defect and distance to the Parry measure of an orbit measure
    Invariance(InvarianceArgs),
    /// Self-similar measure suite: residual, singularity witness, invariance, decay
    Selfsim(SelfsimArgs),
    /// Staged counterexample construction and its near-diagonal simulation
    Counterexample(CounterexampleArgs),
    /// Exact cylinder conditions for a finite-memory source
    Conditions(ConditionsArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct ClassifyArgs {
    /// Base descriptor: INT, p/q, (u+v*sqrtD)/w, or a decimal d.ddd[@bits] (treated as a big float)
    #[arg(long)]
    pub beta: String,
    #[arg(long, default_value_t = 32)]
    pub depth: usize,
    /// Also report m_b and the discontinuity budget ceil(a / m_b)
    #[arg(long)]
    pub a: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
pub struct ExpandArgs {
    #[arg(long)]
    pub beta: String,
    /// Point in [0, 1) as p/q or decimal; `1` expands one itself
    #[arg(long, default_value = "1")]
    pub x: String,
    #[arg(long, default_value_t = 32)]
    pub len: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct ParryArgs {
    #[arg(long)]
    pub beta: String,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Rows of the density/CDF table
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Fourier coefficients for m = 0..=fourier
    #[arg(long, default_value_t = 8)]
    pub fourier: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct OrbitArgs {
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub x: String,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Certified decimal digits per point
    #[arg(long, default_value_t = 15)]
    pub digits: u32,
    /// auto, exact or interval
    #[arg(long, default_value = "auto")]
    pub mode: String,
}

#[derive(Args, Debug, Serialize)]
pub struct WeylArgs {
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub x: String,
    /// Frequencies: comma-separated values or ranges such as 1-8,512
    #[arg(long, default_value = "1")]
    pub m: String,
    /// Checkpoints N, comma-separated
    #[arg(long = "N", default_value = "10000")]
    pub n: String,
}

#[derive(Args, Debug, Serialize)]
pub struct DecayArgs {
    #[arg(long)]
    pub beta: String,
    #[arg(long, default_value_t = 2)]
    pub a: u64,
    /// iid:p0,p1,... , inline JSON source spec, or a path to one
    #[arg(long, default_value = "iid:0.7,0.3")]
    pub source: String,
    #[arg(long, default_value = "1-8,512-1024")]
    pub m: String,
    #[arg(long = "N", default_value_t = 20_000)]
    pub n: usize,
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ExponentArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long, default_value_t = 6)]
    pub zooms: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct Lemma32Args {
    /// uniform, parry or selfsim
    #[arg(long, default_value = "uniform")]
    pub measure: String,
    /// Base of the Parry or self-similar measure
    #[arg(long)]
    pub beta: Option<String>,
    /// Weight of the left map for the self-similar measure
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub m: i64,
    #[arg(long)]
    pub r: f64,
    /// The b in the constant; defaults to the measure's base or 2
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    pub quad_nodes: usize,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct InvarianceArgs {
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub x: String,
    #[arg(long = "N", default_value_t = 10_000)]
    pub n: usize,
    /// Largest test frequency for the defect
    #[arg(long, default_value_t = 64)]
    pub degree: u32,
    /// Frequencies in the Sobolev-weighted distance to the Parry measure; 0 skips it
    #[arg(long, default_value_t = 32)]
    pub parry_m: u32,
    /// Cesaro window for the Wiener atom estimate; 0 skips it
    #[arg(long, default_value_t = 256)]
    pub wiener: i64,
}

#[derive(Args, Debug, Serialize)]
pub struct SelfsimArgs {
    #[arg(long, default_value = "11/5")]
    pub beta: String,
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    #[arg(long, default_value_t = 1e5)]
    pub xi_max: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 48)]
    pub depth: usize,
    #[arg(long, default_value_t = 12)]
    pub level: u32,
    /// Intervals in the invariance grid
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Random xi probes of the functional equation
    #[arg(long, default_value_t = 100)]
    pub probes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 3)]
    pub l: u32,
    #[arg(long, default_value = "1/4")]
    pub epsilon: String,
    /// Stages to build; simulation runs on all of them
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    /// Past symbols the conditional measure is read through
    #[arg(long, default_value_t = 16)]
    pub window: usize,
    #[arg(long, default_value_t = 100_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 2000)]
    pub pasts: usize,
    /// Exponents probed for polynomial decay of the near-diagonal mass
    #[arg(long, default_value = "0.05,0.1,0.2")]
    pub betas: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct ConditionsArgs {
    /// iid:p0,p1,... , inline JSON source spec, or a path to one
    #[arg(long)]
    pub source: String,
    /// Cylinder levels k = a^1 .. a^m_max
    #[arg(long, default_value_t = 10)]
    pub m_max: usize,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Expand(_) => "expand",
            Command::Parry(_) => "parry",
            Command::Orbit(_) => "orbit",
            Command::Weyl(_) => "weyl",
            Command::Decay(_) => "decay",
            Command::Exponent(_) => "exponent",
            Command::Lemma32(_) => "lemma32",
            Command::Invariance(_) => "invariance",
            Command::Selfsim(_) => "selfsim",
            Command::Counterexample(_) => "counterexample",
            Command::Conditions(_) => "conditions",
        }
    }
}

fn run(cli: &Cli) -> Result<output::Outcome, CliError> {
    if cli.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    match &cli.command {
        Command::Classify(a) => commands::classify(a),
        Command::Expand(a) => commands::expand(a),
        Command::Parry(a) => commands::parry(a),
        Command::Orbit(a) => commands::orbit(a),
        Command::Weyl(a) => commands::weyl(a),
        Command::Decay(a) => commands::decay(a, cli.workers),
        Command::Exponent(a) => commands::exponent(a),
        Command::Lemma32(a) => commands::lemma32(a),
        Command::Invariance(a) => commands::invariance(a),
        Command::Selfsim(a) => commands::selfsim(a),
        Command::Counterexample(a) => commands::counterexample(a),
        Command::Conditions(a) => commands::conditions(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("betalab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let name = cli.command.name();
    let info = RunInfo {
        command: name,
        argv: std::env::args().skip(1).collect(),
        parameters: serde_json::to_value(&cli.command).unwrap_or_default(),
        workers: cli.workers,
        proxy: (name == "decay").then_some(betalab::orbit_fourier::PROXY_DEFINITION),
    };
    let out = resolve_out(cli.out.as_deref());
    let bytes = match write_artifacts(&out, &info, &outcome) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("betalab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let _ = std::io::stdout().write_all(&bytes);
    if let Some(what) = &outcome.violation {
        eprintln!("betalab: invariant violated: {what}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
