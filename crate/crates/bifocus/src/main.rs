use std::path::PathBuf;
use std::process::ExitCode;

use bifocus::config::Kind;
use bifocus::io::save_model;
use bifocus::{gen_reference, run_scenario, Failure};
use clap::{Parser, Subcommand};

/// Corank-2 tangency experiments at bi-focus orbits.
#[derive(Parser)]
#[command(name = "bifocus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Genericity determinants of one or more models.
    Validate { config: PathBuf },
    /// One index-raising step on a pair of models.
    Raise { config: PathBuf },
    /// Build an index-(N,0) tangency from index-(1,0) models.
    OrderN { config: PathBuf },
    /// Convergence of rescaled first-return maps.
    Renorm { config: PathBuf },
    /// Approximate a disk map by a rescaled first return.
    Universal { config: PathBuf },
    /// Write seeded index-(n,0) models as JSON files.
    GenReference {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (kind, config) = match cli.command {
        Command::Validate { config } => (Kind::Validate, config),
        Command::Raise { config } => (Kind::Raise, config),
        Command::OrderN { config } => (Kind::OrderN, config),
        Command::Renorm { config } => (Kind::Renorm, config),
        Command::Universal { config } => (Kind::Universal, config),
        Command::GenReference { seed, count, order, out } => {
            if count < 1 || order < 1 {
                return Err(Failure::Contract("gen-reference: count and order must be >= 1".into()));
            }
            for (i, gm) in gen_reference(seed, count, order).iter().enumerate() {
                save_model(&out.join(format!("model_{i:04}.json")), gm)?;
            }
            println!("wrote {count} models to {}", out.display());
            return Ok(());
        }
    };
    let report = run_scenario(&config, Some(kind))?;
    print!("{}", report.summary);
    println!("run directory: {}", report.run_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
