use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qelab::{ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "qelab", version, about = "Seeded numerical experiments on quasi-periodically forced random operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; replaces the seeds of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Exact identity suites.
    Identities(RunArgs),
    /// Wegner estimates in theta and in the disorder.
    Wegner(RunArgs),
    /// Frequency exclusion measures and the bad-box census.
    Exclusion(RunArgs),
    /// Multi-scale census, separation and regularity probes.
    Msa(RunArgs),
    /// Time evolution checks and the localization contrast.
    Dynamics(RunArgs),
    /// Eigenvector localization census.
    Localization(RunArgs),
    /// Re-executes a recorded run and compares its artifacts.
    Replay {
        dir: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(kind: Kind, args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.kind != kind {
        bail!("config is for `{}`, not `{}`", cfg.kind.name(), kind.name());
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = args.out {
        cfg.out = Some(out);
    }
    cfg.validate()?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("qelab-out/{}-{}", kind.name(), &cfg.hash()[..12])));
    let (outcome, _) = qelab::run(&cfg, &dir, args.workers).with_context(|| format!("running {}", kind.name()))?;
    for a in &outcome.assertions {
        let tag = match (a.pass, a.hard) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "warn",
        };
        println!("{tag:4}  {:32} {}", a.name, a.detail);
    }
    println!("artifacts in {}", dir.display());
    Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Identities(a) => run(Kind::Identities, a),
        Command::Wegner(a) => run(Kind::Wegner, a),
        Command::Exclusion(a) => run(Kind::Exclusion, a),
        Command::Msa(a) => run(Kind::Msa, a),
        Command::Dynamics(a) => run(Kind::Dynamics, a),
        Command::Localization(a) => run(Kind::Localization, a),
        Command::Replay { dir, workers } => {
            let report = qelab::replay(&dir, workers)?;
            for f in &report.matched {
                println!("same      {f}");
            }
            for f in &report.tampered {
                println!("TAMPERED  {f}");
            }
            for m in &report.mismatched {
                println!("DIFFERS   {} line {:?}\n  recorded: {}\n  replayed: {}", m.file, m.line, m.recorded, m.replayed);
            }
            Ok(if report.identical() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
