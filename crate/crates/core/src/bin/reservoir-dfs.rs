use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reservoir_dfs::cli::{execute, exit_code, Scenario, ScenarioConfig};
use reservoir_dfs::Result;

/// Engineered-reservoir protection of two-ion entangled states.
#[derive(Parser, Debug)]
#[command(name = "reservoir-dfs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (defaults to `<command>.csv` or `<command>.json`).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fidelity of the protected state under spontaneous emission (CSV).
    Fig1,
    /// Geometric phases against entanglement degree (CSV).
    Fig2,
    /// Bell-state reservoir parameters and inversion (JSON).
    Table1,
    /// Reservoir parameters for a given state (JSON).
    Invert,
    /// Frame, reduction-chain and integrator checks (JSON).
    Validate,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Fig1 => Scenario::Fig1,
            Command::Fig2 => Scenario::Fig2,
            Command::Table1 => Scenario::Table1,
            Command::Invert => Scenario::Invert,
            Command::Validate => Scenario::Validate,
        }
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    for s in &cli.set {
        cfg = cfg.apply_set(s)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = Scenario::from(cli.command);
    let result = load(&cli).and_then(|cfg| execute(scenario, &cfg));
    match result {
        Ok(outcome) => {
            println!("{}: {} -> {}", scenario.name(), outcome.summary, outcome.path.display());
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
