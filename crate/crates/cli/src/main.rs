use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use tmsae_cli::rows::to_csv_string;
use tmsae_cli::{
    cmd_compare, cmd_rug, cmd_scaling, cmd_stats, cmd_sweep, cmd_train, exit_code, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "tmsae",
    version,
    about = "Train and analyze sparse ReLU autoencoders"
)]
struct Cli {
    /// TOML experiment config; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model from the [model] section.
    Train,
    /// Train the [sweep] grid.
    Sweep,
    /// Build a Persian rug from the [rug] section.
    Rug,
    /// Trained vs rug vs linear loss over the [compare] widths.
    Compare,
    /// High-sparsity scaling table from the [scaling] section.
    Scaling,
    /// Recompute statistics of a saved model.
    Stats {
        weights: PathBuf,
        #[arg(long)]
        p: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.as_path();
    let text = match cli.command {
        Command::Train => to_csv_string(&[cmd_train(&cfg, out)?])?,
        Command::Sweep => {
            let rows = cmd_sweep(&cfg, out, cli.threads)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            if failed > 0 {
                eprintln!(
                    "warning: {failed} of {} cells failed; see the error column",
                    rows.len()
                );
            }
            to_csv_string(&rows)?
        }
        Command::Rug => to_csv_string(&[cmd_rug(&cfg, out)?])?,
        Command::Compare => to_csv_string(&cmd_compare(&cfg, out, cli.threads)?)?,
        Command::Scaling => to_csv_string(&cmd_scaling(&cfg, out)?)?,
        Command::Stats { weights, p } => to_csv_string(&[cmd_stats(&cfg, &weights, p)?])?,
    };
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprintln!(
                "error: {}",
                e.to_string().trim_start_matches("error: ").trim_end()
            );
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
