use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use hkbounds_cli::{run, CliError, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "hkb", version, about = "Kernel bounds, value functions and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample endpoints of a model and write the batch.
    Simulate(Common),
    /// Evaluate closed-form kernels at given points.
    DensityEval(Common),
    /// Value functions, with optional HJB residuals.
    ValueFn(Common),
    /// Build a Harnack chain.
    Chain(Common),
    /// Carnot–Carathéodory distances on the Heisenberg group.
    CcDistance(Common),
    /// Compare a simulated density with lower and upper envelopes.
    Verify(Common),
    /// Pick the HJB convention from the Kolmogorov closed form.
    CalibrateHjb(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn split(sub: Sub) -> (Command, Common) {
    match sub {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::DensityEval(c) => (Command::DensityEval, c),
        Sub::ValueFn(c) => (Command::ValueFn, c),
        Sub::Chain(c) => (Command::Chain, c),
        Sub::CcDistance(c) => (Command::CcDistance, c),
        Sub::Verify(c) => (Command::Verify, c),
        Sub::CalibrateHjb(c) => (Command::CalibrateHjb, c),
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn execute(command: Command, args: &Common) -> Result<(PathBuf, Vec<PathBuf>), CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.command() != command {
        return Err(CliError::Config(format!("config is for {}, not {}", cfg.command, command.name())));
    }
    if let Some(seed) = args.seed {
        if !cfg.set_seed(seed) {
            eprintln!("note: {} does not sample, --seed ignored", command.name());
        }
    }
    let dir = args.output.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let started = now();
    let files = pool.install(|| run(&cfg, &dir))?;
    let mut log = std::fs::OpenOptions::new().create(true).append(true).open(dir.join("run.log"))?;
    writeln!(
        log,
        "{started} {} config={} threads={} finished={} files={}",
        command.name(),
        args.config.display(),
        pool.current_num_threads(),
        now(),
        files.len()
    )?;
    Ok((dir, files))
}

fn main() -> ExitCode {
    let (command, args) = split(Cli::parse().command);
    match execute(command, &args) {
        Ok((_, files)) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hkb {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
