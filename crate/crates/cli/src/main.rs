mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use transference_core::Error;

#[derive(Parser)]
#[command(name = "transference-lab", version, about = "Exact experiments in multiplicative Diophantine transference")]
struct Cli {
    /// Worker threads; falls back to TRANSFERENCE_LAB_THREADS. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Table of the section constant Δ_d with its bounds.
    Delta(DeltaArgs),
    /// Central section volume of a box or parallelepiped.
    Section(SectionArgs),
    /// Best-approximation records of a matrix.
    Scan(ScanArgs),
    /// Certify a transposed witness for an approximation pair.
    Transfer(TransferArgs),
    /// Transfer an approximation function ψ to φ (and χ).
    PsiTransfer(PsiArgs),
    /// Exponent estimates from records, or the exponent maps.
    Exponents(ExponentsArgs),
    /// Records of q‖qα‖‖qβ‖.
    Littlewood(LittlewoodArgs),
    /// Check the section-dual properties on random parallelepipeds.
    VerifyLemmas(LemmaArgs),
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(2..=4096))]
    dmax: u64,
    /// Compare every value against a Monte-Carlo estimate.
    #[arg(long)]
    mc_check: bool,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SectionArgs {
    /// Half-sides c1,...,cd.
    #[arg(long = "box")]
    half_sides: String,
    /// Normal direction e1,...,ed.
    #[arg(long)]
    dir: String,
    /// Optional basis rows "a11,a12;a21,a22" mapping the box to a parallelepiped.
    #[arg(long)]
    basis: Option<String>,
    /// Add a Monte-Carlo estimate (boxes only).
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    theta: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    sup_bound: u64,
    #[arg(long)]
    records_out: Option<PathBuf>,
    /// Also report the minimum of Π'(x)^m Π(Θx − y)^n over the region.
    #[arg(long)]
    badness: bool,
    /// Uniform feasibility probe "t:γ".
    #[arg(long)]
    uniform: Option<String>,
    /// Seconds before the search gives up (exit 3).
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long, required_unless_present = "revalidate")]
    theta: Option<PathBuf>,
    /// "x1,...,xm:y1,...,yn".
    #[arg(long, required_unless_present = "revalidate")]
    pair: Option<String>,
    /// Use the sup-norm theorem instead of the multiplicative one.
    #[arg(long)]
    mahler: bool,
    /// Explicit budget "X^m,U^n" (or "X,U" with --mahler).
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    certificate_out: Option<PathBuf>,
    /// Recompute every inequality of a stored certificate.
    #[arg(long, conflicts_with_all = ["theta", "pair", "mahler", "budget", "certificate_out"])]
    revalidate: Option<PathBuf>,
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Args)]
struct PsiArgs {
    /// power:γ | log1 | log2 | table:FILE
    #[arg(long)]
    spec: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Points s1,s2,... at which to evaluate φ.
    #[arg(long)]
    eval: String,
    /// Also evaluate χ (n = 1 only).
    #[arg(long)]
    chi: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ExponentsArgs {
    #[command(subcommand)]
    map: Option<ExponentsCommand>,
    /// Records in JSON lines, as written by `scan --records-out`.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = transference_core::exponents::DEFAULT_TAIL_FRACTION)]
    tail: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExponentsCommand {
    /// Evaluate an exponent map exactly.
    Map(MapArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Dyson,
    German,
    TrBeta,
    BetaFromMbeta,
}

#[derive(Args)]
struct MapArgs {
    /// "p/q", a decimal, or "inf".
    #[arg(long)]
    gamma: String,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum)]
    which: Which,
}

#[derive(Args)]
struct LittlewoodArgs {
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    /// Digits of precision of decimal inputs.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    qmax: u64,
    /// Look for q with q‖qα‖‖qβ‖ ≤ (4/3)^{9/4} μ^{1/4} and max dist ≤ (4/3)^{5/4} μ^{1/4}.
    #[arg(long)]
    desk_test: bool,
    #[arg(long)]
    records_out: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LemmaArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=6))]
    d: u64,
    /// Number of random parallelepipeds.
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Samples per body for the sampled properties.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status for a command outcome.
pub enum Status {
    Ok,
    Failed,
    Inconclusive,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Falsified(_) => 1,
        Error::Inconclusive(_) | Error::PrecisionGuard { .. } => 3,
        _ => 2,
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("TRANSFERENCE_LAB_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| format!("TRANSFERENCE_LAB_THREADS={v} is not a thread count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Delta(a) => commands::delta(a),
        Command::Section(a) => commands::section(a),
        Command::Scan(a) => commands::scan(a),
        Command::Transfer(a) => commands::transfer(a),
        Command::PsiTransfer(a) => commands::psi_transfer(a),
        Command::Exponents(a) => commands::exponents(a),
        Command::Littlewood(a) => commands::littlewood(a),
        Command::VerifyLemmas(a) => commands::verify_lemmas(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed) => ExitCode::from(1),
        Ok(Status::Inconclusive) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
