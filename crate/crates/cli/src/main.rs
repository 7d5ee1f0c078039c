use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcflab::experiment::{Experiment, ExperimentConfig, Stage};

#[derive(Parser)]
#[command(name = "mcflab", version, about = "Mean curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keep every N-th step.
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evolve the initial shape and write the trajectory.
    Simulate,
    /// Write the per-snapshot diagnostics CSV.
    Diagnose,
    /// Write spacetime norms.
    Norms,
    /// Run the inequality checks and write the certification JSON.
    Inequalities,
    /// Build the blow-up sequence and write its CSV.
    Rescale,
    /// Write the text summary.
    Report,
    /// Every stage in order.
    All,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Stage::Simulate,
            Command::Diagnose => Stage::Diagnose,
            Command::Norms => Stage::Norms,
            Command::Inequalities => Stage::Inequalities,
            Command::Rescale => Stage::Rescale,
            Command::Report => Stage::Report,
            Command::All => Stage::All,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(4);
    };
    let mut config = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(stride) = cli.stride {
        config.output.stride = stride;
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let mut exp = Experiment::new(config);
    if let Some(out) = cli.out {
        exp = exp.with_out(out);
    }
    match exp.run(cli.command.into()) {
        Ok(outcome) => {
            if !cli.quiet {
                for line in &outcome.log {
                    eprintln!("{line}");
                }
                for a in &outcome.artifacts {
                    eprintln!("wrote {}", a.display());
                }
                if outcome.certified == Some(false) {
                    eprintln!("certification failed");
                }
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
