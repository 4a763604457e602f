use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod report;

use commands::Command;
use config::{parse_mu, Overrides, RunConfig};

/// Verification driver for the Abelian integrals of the quadratic reversible
/// center. Exit status: 0 all checks pass, 2 some row flagged, 1 error.
#[derive(Debug, Parser)]
#[command(name = "q4lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// `key = value` file read before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeat for several values.
    #[arg(long)]
    kappa: Vec<f64>,
    /// Weights of the reduced form, `a,b,c,d`.
    #[arg(long, value_parser = parse_mu_arg, allow_hyphen_values = true)]
    mu: Option<[f64; 4]>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mu_arg(s: &str) -> Result<[f64; 4], String> {
    parse_mu(s).map_err(|e| format!("{e:#}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let flags = Overrides {
        kappa: cli.kappa,
        mu: cli.mu,
        trials: cli.trials,
        seed: cli.seed,
        tol: cli.tol,
        grid: cli.grid,
        out: cli.out,
    };
    let result = RunConfig::load(cli.config.as_deref(), &flags).and_then(|cfg| {
        let out = commands::run(cli.command, &cfg)?;
        Ok((cfg, out))
    });
    match result {
        Ok((cfg, out)) => {
            for f in &out.files {
                println!("wrote {}", cfg.output_dir.join(f).display());
            }
            println!("{} rows, {} flagged", out.rows.len(), out.flagged);
            for r in out.rows.iter().filter(|r| r.status == report::Status::Flag) {
                println!("flag: kappa={} index={} {} = {:e}", r.kappa, r.index, r.quantity, r.value);
            }
            if out.flagged == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
