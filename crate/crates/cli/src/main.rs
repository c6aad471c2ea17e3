//! `gcs-walks`: build, validate, bound and solve shortest-walk instances.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gcs-walks", version, about = "Shortest walks in graphs of convex sets")]
struct Cli {
    /// Worker threads for batched solves (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output on stderr (-v, -vv).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that an instance parses and passes construction checks.
    Validate { instance: PathBuf },
    /// Compile a builder spec into an instance file.
    Build {
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Synthesize cost-to-go lower bounds.
    Synthesize(SynthesizeArgs),
    /// Search for a short walk guided by the lower bounds.
    Solve(SolveArgs),
    /// Enumerate all walks up to a length and solve each one.
    Oracle(OracleArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ObjectiveKind {
    /// Maximize the bound at the source point.
    Source,
    /// Maximize the average bound over per-vertex sample points.
    Sampled,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    instance: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "source")]
    objective: ObjectiveKind,
    /// Leave out products of pairs of linear constraints.
    #[arg(long)]
    no_pairwise: bool,
    /// Add this constant to every edge cost first.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Check the Bellman inequality on this many sampled pairs per edge.
    #[arg(long)]
    verify: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    instance: PathBuf,
    #[arg(short, long)]
    bounds: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    lookahead: usize,
    /// Maximum lookahead steps (default: 10 per vertex).
    #[arg(long)]
    budget: Option<usize>,
    /// Maximum levels a single backtrack may unwind (default: the budget).
    #[arg(long)]
    backtrack_limit: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Start from a point drawn inside the source set instead of the
    /// instance's source point.
    #[arg(long)]
    random_source: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip trajectory reoptimization and cycle shortcutting.
    #[arg(long)]
    raw: bool,
    /// Compare with the exhaustive optimum over walks of up to `--oracle-k-max` edges.
    #[arg(long)]
    oracle_check: bool,
    #[arg(long, default_value_t = 10)]
    oracle_k_max: usize,
    /// Replay the trajectory through the dynamics of this PWA spec.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Search trace as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    emit_csv: Option<PathBuf>,
    #[arg(long)]
    emit_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Stop once this many walks of one length have been enumerated.
    #[arg(long, default_value_t = 1_000_000)]
    cap: usize,
    #[arg(long)]
    epsilon: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().expect("thread pool is built once");
    }
    let result = match &cli.command {
        Command::Validate { instance } => commands::validate(instance),
        Command::Build { spec, out } => commands::build(spec, out),
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Solve(a) => commands::solve(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
