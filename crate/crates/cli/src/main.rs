use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use casimir_cli::config::RunConfig;
use casimir_cli::{commands, output, validate};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "casimir", version = casimir_cli::VERSION, about = "Casimir energies from closed optical paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-class table, finite part and divergent constant for one geometry.
    Energy {
        #[arg(long)]
        config: PathBuf,
    },
    /// Sphere–plate energies and PFA comparators over log-spaced ξ = a/R.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        xi_min: f64,
        #[arg(long)]
        xi_max: f64,
        #[arg(long)]
        points: usize,
    },
    /// Local integrand on an (r, z) grid.
    Map {
        #[arg(long)]
        config: PathBuf,
        /// Cells per axis; overrides `output.grid`.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Checks against closed forms; exits nonzero on any failure.
    Validate {
        /// Monte Carlo samples per integral.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_k2: f64,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Energy { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let r = commands::energy(&cfg)?;
            let warnings = commands::energy_warnings(&r);
            warn(&warnings);
            commands::write_energy(output::open(cfg.output.path.as_deref())?, &cfg, &r, &warnings)?;
        }
        Command::Sweep { config, xi_min, xi_max, points } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let (rows, warnings) = commands::sweep(&cfg, xi_min, xi_max, points)?;
            warn(&warnings);
            commands::write_sweep(output::open(cfg.output.path.as_deref())?, &cfg, &rows, &warnings)?;
        }
        Command::Map { config, grid } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return Ok(code),
            };
            let cells = commands::map(&cfg, grid.unwrap_or(cfg.output.grid))?;
            commands::write_map(output::open(cfg.output.path.as_deref())?, &cfg, &cells)?;
        }
        Command::Validate { samples, perturb_k2 } => {
            let checks = validate::run(&validate::Options { samples, k2_perturbation: perturb_k2 });
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = casimir_cli::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
