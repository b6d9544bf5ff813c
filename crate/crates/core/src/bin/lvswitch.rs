use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use lvswitch::cli::{self, Command};

#[derive(Parser)]
#[command(name = "lvswitch", version, about = "Switched two-prey/one-predator Lotka-Volterra toolkit")]
struct Args {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Simulate one trajectory.
    Simulate,
    /// Estimate the two prey invasion rates.
    Invade,
    /// Persistence/extinction verdict, with optional extinction Monte Carlo.
    Classify,
    /// Per-environment occupation histograms and heatmaps.
    Density,
    /// Strong bracket condition on the prey/predator faces.
    Bracket,
    /// Invasion rate over a grid of switching-rate scales.
    Sweep,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Invade => Command::Invade,
            Cmd::Classify => Command::Classify,
            Cmd::Density => Command::Density,
            Cmd::Bracket => Command::Bracket,
            Cmd::Sweep => Command::Sweep,
        }
    }
}

fn run(args: &Args) -> anyhow::Result<()> {
    let path = args.config.as_ref().context("--config <path> is required")?;
    let cfg = cli::load_config(path, args.seed)?;
    let out = cli::output_dir(&cfg, args.out.as_deref());
    let cmd = Command::from(args.command);
    let files = cli::run(cmd, &cfg, &out, args.threads).with_context(|| format!("{} failed", cmd.name()))?;
    log::info!("wrote {} files to {}", files.len(), out.display());
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<lvswitch::Error>() {
                Some(err) => cli::exit_code(err),
                None if args.config.is_none() => 2,
                None => 1,
            };
            ExitCode::from(code as u8)
        }
    }
}
