use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use scoremax::config::{parse_config, parse_config_str, Overrides, RunMode};
use scoremax::run;

#[derive(Parser)]
#[command(name = "scoremax", version, about = "Effort-maximizing reward contracts for a Poisson learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Dynamic,
    Static,
}

#[derive(Subcommand)]
enum Command {
    /// Longest implementable stopping time and a contract achieving it.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "dynamic")]
        mode: SolveMode,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: String,
    },
    /// The agent's best response to a contract CSV.
    BestResponse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        out: String,
    },
    /// Continuous-time optimum under perfect good news.
    Analytic {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: String,
    },
    /// Runs the verification checks; exits 2 if any fails.
    Verify {
        /// Directory of fixture JSON files; defaults to the bundled set.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        out: String,
    },
    /// Parameter grid from the config's `sweep` object.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config_path, fixtures, overrides) = match cli.command {
        Command::Solve { config, mode, tol, out } => {
            let mode = match mode {
                SolveMode::Dynamic => RunMode::SolveDynamic,
                SolveMode::Static => RunMode::SolveStatic,
            };
            (Some(config), None, Overrides { mode: Some(mode), out: Some(out), tol, contract: None })
        }
        Command::BestResponse { config, contract, out } => (
            Some(config),
            None,
            Overrides { mode: Some(RunMode::BestResponse), out: Some(out), contract: Some(contract), tol: None },
        ),
        Command::Analytic { config, out } => {
            (Some(config), None, Overrides { mode: Some(RunMode::Analytic), out: Some(out), ..Default::default() })
        }
        Command::Verify { fixtures, out } => {
            (None, fixtures, Overrides { mode: Some(RunMode::Verify), out: Some(out), ..Default::default() })
        }
        Command::Sweep { config, out } => {
            (Some(config), None, Overrides { mode: Some(RunMode::Sweep), out: Some(out), ..Default::default() })
        }
    };
    let parsed = match &config_path {
        Some(p) => parse_config(p, &overrides),
        None => parse_config_str("{}", std::path::Path::new("."), &overrides),
    };
    let config = match parsed {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&config, fixtures.as_deref()) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
