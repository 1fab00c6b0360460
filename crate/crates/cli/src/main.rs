//! `ghzw` — simulate noisy GHZ correlations, sweep noise thresholds, certify
//! behaviors against nonfanout-inflation LPs, and analyze coincidence-count
//! datasets.
//!
//! Exit codes: 0 = success, 2 = informative "no violation / feasible"
//! outcome, 1 = error.

mod commands;
mod output;
mod witness_source;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "ghzw", version, about = "Device-independent GHZ witness toolkit")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Emit CSV instead of JSON.
    #[arg(long, global = true, default_value_t = false)]
    csv: bool,

    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,

    /// Feasibility tolerance for certificate verification.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_feas: f64,

    /// Duality-gap tolerance for certificate verification.
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_gap: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-term theoretical witness values on a noisy GHZ state.
    Simulate(SimulateArgs),
    /// Witness values over a (p, k) noise grid with exact thresholds.
    Sweep(SweepArgs),
    /// Inflation-LP feasibility, visibility and dual certificate for a
    /// quantum behavior.
    Certify(CertifyArgs),
    /// Witness values, Monte Carlo error bars and the stabilizer fidelity
    /// block from a coincidence-count dataset.
    Analyze(AnalyzeArgs),
    /// Enumerate the local deterministic vertices of a scenario.
    Vertices(VerticesArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Builtin witness (w3 | w4 | n-party) or a witness JSON path.
    #[arg(long, default_value = "w3")]
    witness: String,

    /// Party count for the n-party family.
    #[arg(long)]
    n: Option<usize>,

    /// GHZ weight p of the noise model.
    #[arg(long, default_value_t = 1.0)]
    p: f64,

    /// Dephasing fraction k of the noise model.
    #[arg(long, default_value_t = 0.0)]
    k: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Builtin witness (w3 | w4 | n-party) or a witness JSON path.
    #[arg(long, default_value = "w3")]
    witness: String,

    /// Party count for the n-party family.
    #[arg(long)]
    n: Option<usize>,

    /// Grid `start:end:steps` over p, steps ≥ 2.
    #[arg(long, default_value = "0:1:41")]
    p_range: String,

    /// Dephasing fractions to sweep (repeatable).
    #[arg(long = "k", num_args = 1.., default_values_t = [0.0, 0.5, 1.0])]
    k: Vec<f64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Builtin witness (w3 | w4 | n-party) fixing the scenario and strategy.
    #[arg(long, default_value = "w3")]
    witness: String,

    /// Party count for the n-party family.
    #[arg(long)]
    n: Option<usize>,

    /// GHZ weight p of the behavior to certify.
    #[arg(long, default_value_t = 1.0)]
    p: f64,

    /// Dephasing fraction k of the behavior to certify.
    #[arg(long, default_value_t = 0.0)]
    k: f64,

    /// Inflation source: `ring` (with --order) or a graph JSON path holding
    /// one graph or an array of graphs.
    #[arg(long, default_value = "ring")]
    inflation: String,

    /// Copy count of the builtin ring inflation.
    #[arg(long, default_value_t = 2)]
    order: usize,

    /// Also write the event-space LP in the plain-text dump format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,

    /// Write the dual certificate as probability-form witness JSON.
    #[arg(long)]
    cert_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Counts CSV; the bundled raw-count table when omitted.
    #[arg(long)]
    dataset: Option<PathBuf>,

    /// Monte Carlo resamples for the Poisson error bars.
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
}

#[derive(Args, Debug)]
struct VerticesArgs {
    /// Input cardinalities per party, e.g. `2,2,2`.
    #[arg(long, default_value = "2,2,2")]
    inputs: String,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GHZW_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("GHZW_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            bail!("GHZW_THREADS must be positive");
        }
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let ctx = output::OutputContext {
        out: cli.out.clone(),
        csv: cli.csv,
        seed: cli.seed,
        tol_feas: cli.tol_feas,
        tol_gap: cli.tol_gap,
    };
    match &cli.command {
        Command::Simulate(args) => commands::simulate(args, &ctx),
        Command::Sweep(args) => commands::sweep(args, &ctx),
        Command::Certify(args) => commands::certify(args, &ctx),
        Command::Analyze(args) => commands::analyze(args, &ctx),
        Command::Vertices(args) => commands::vertices(args, &ctx),
    }
}
