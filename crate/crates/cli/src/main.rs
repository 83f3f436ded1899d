mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qtb_core::io::Format;
use qtb_core::Error;

#[derive(Parser, Debug)]
#[command(name = "qtb", version, about = "Surface-code decoder benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// LER sweep over the spec's grid.
    Sweep(RunArgs),
    /// Runtime/LER dominance table at one distance and reference point.
    Pareto(RunArgs),
    /// Bootstrap crossing distribution per decoder and distance pair.
    CrossingBootstrap(RunArgs),
    /// LER ratio between consecutive distances.
    DistanceGain(RunArgs),
    /// One-factor sweep of an auxiliary noise channel.
    Ablation(RunArgs),
    /// Bootstrap rank bands per decoder.
    RankStability(RunArgs),
    /// Mean pointwise LER difference between decoder pairs.
    EffectSize(RunArgs),
    /// Serial against parallel run of the same spec.
    Fidelity(RunArgs),
    /// Dense critical-window sweep and its crossing table.
    DenseWindow(RunArgs),
    /// Print the parity-check layout at one distance as JSON.
    Layout {
        #[arg(long)]
        distance: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Spec file of `key = value` lines.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, env = "QTB_THREADS")]
    threads: Option<usize>,
    #[arg(long, env = "QTB_SEED")]
    seed: Option<u64>,
    /// Overrides the spec's trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Existing sweep records to analyse instead of running a sweep.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Fixed artifact names and zeroed timing fields.
    #[arg(long)]
    stable: bool,
    /// Fail instead of skipping a decoder whose guide table is missing.
    #[arg(long)]
    strict: bool,
}

impl RunArgs {
    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EmptyData(_) => 3,
        Error::GuideTable(_) => 4,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Layout { distance } => commands::layout(*distance),
        Command::Sweep(a) => commands::run("sweep", a),
        Command::Pareto(a) => commands::run("pareto", a),
        Command::CrossingBootstrap(a) => commands::run("crossing-bootstrap", a),
        Command::DistanceGain(a) => commands::run("distance-gain", a),
        Command::Ablation(a) => commands::run("ablation", a),
        Command::RankStability(a) => commands::run("rank-stability", a),
        Command::EffectSize(a) => commands::run("effect-size", a),
        Command::Fidelity(a) => commands::run("fidelity", a),
        Command::DenseWindow(a) => commands::run("dense-window", a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qtb: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
