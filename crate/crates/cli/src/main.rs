use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use perovsim::config::{bundled, parse_config, BUNDLED};
use perovsim::run::{run_scenario, Mode, EXIT_CONFIG};
use perovsim::ScenarioSpec;

/// Finite-volume drift-diffusion simulator for perovskite solar cells.
///
/// Exit codes: 0 all invariants hold, 2 an invariant failed, 3 the solver
/// aborted, 4 the configuration is invalid.
#[derive(Parser)]
#[command(name = "perovsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario kind given in the file.
    Simulate { config: Source },
    /// Check the statistics axioms and the Fermi-Dirac oracle.
    CheckAxioms { config: Source },
    /// Stationary states for the bias list of the scenario.
    Sweep { config: Source },
    /// Replay the scenario along perturbed solver paths.
    ProbeUniqueness {
        config: Source,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Spatial and temporal convergence study.
    Study {
        config: Source,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// List the bundled scenarios.
    List,
}

/// A scenario file path, or `builtin:<name>` for a bundled scenario.
#[derive(Clone, Debug)]
struct Source(String);

impl std::str::FromStr for Source {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Source(s.to_string()))
    }
}

impl Source {
    fn load(&self) -> Result<ScenarioSpec, perovsim::ConfigError> {
        match self.0.strip_prefix("builtin:") {
            Some(name) => bundled(name),
            None => parse_config(&PathBuf::from(&self.0)),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (source, mode, seed) = match cli.command {
        Command::List => {
            for name in BUNDLED {
                println!("builtin:{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Simulate { config } => (config, Mode::Kind, None),
        Command::CheckAxioms { config } => (config, Mode::Axioms, None),
        Command::Sweep { config } => (config, Mode::Sweep, None),
        Command::ProbeUniqueness { config, n, seed } => (config, Mode::Probe { n, seed: 0 }, seed),
        Command::Study { config, levels } => (config, Mode::Study { levels }, None),
    };
    let spec = match source
        .load()
        .with_context(|| format!("loading {}", source.0))
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    // Without --seed the probe uses the scenario seed.
    let mode = match mode {
        Mode::Probe { n, .. } => Mode::Probe {
            n,
            seed: seed.unwrap_or(spec.seed),
        },
        m => m,
    };
    match run_scenario(&spec, mode) {
        Ok(outcome) => {
            for inv in &outcome.verdict.invariants {
                println!(
                    "{:<28} {:<4} value={:.3e} {}",
                    inv.name,
                    if inv.passed { "ok" } else { "FAIL" },
                    inv.value,
                    inv.detail
                );
            }
            if let Some(msg) = &outcome.verdict.aborted {
                eprintln!("solver aborted: {msg}");
            }
            println!("artifacts in {}", outcome.output.display());
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {:#}", anyhow::Error::from(e));
            ExitCode::from(code as u8)
        }
    }
}
