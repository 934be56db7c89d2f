//! asymlyap — suboptimal LQ design with non-symmetric Lyapunov-like
//! certificates.
//!
//! Exit codes: 0 success, 2 infeasible or unstable, 3 a certificate failed
//! its own verification, 64 unreadable or malformed input, 65 inconsistent
//! dimensions or invalid values. `ASYMLYAP_LOG` (quiet, info, debug) sets
//! the stderr diagnostics level.

mod commands;
mod error;
mod problem;
mod report;

use clap::{Args, Parser, Subcommand};
use commands::{ConsensusArgs, Settings};
use error::{CliError, EXIT_BOUND_VIOLATED, EXIT_INFEASIBLE, EXIT_OK};
use report::Report;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "asymlyap", version)]
#[command(about = "Suboptimal LQ design via asymmetric Lyapunov-like inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the design LMIs and verify the certificate
    Design {
        /// Problem file (TOML)
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Optimal LQR baseline from the Riccati equation
    Riccati {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a given design matrix P or gain K
    Verify {
        input: PathBuf,
        /// TOML file holding `P = [[..]]` or `K = [[..]]`
        #[arg(long)]
        gain: PathBuf,
        /// Claimed cost bound to test against
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Design and simulate a path-graph consensus protocol
    Consensus {
        /// File with a `[consensus]` table; replaces the value flags
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        agents: Option<usize>,
        /// Open-loop pole `a` of every agent
        #[arg(long, allow_hyphen_values = true)]
        pole: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        /// Initial agent states, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        states: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Strictness factor; margins are epsilon * (1 + ||A||_F)
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    feas_tol: Option<f64>,
    /// Upper bound on W (default 1e3 * ||Q||_F)
    #[arg(long)]
    w_cap: Option<f64>,
    /// Simulation horizon
    #[arg(long)]
    horizon: Option<f64>,
    /// Simulation step
    #[arg(long)]
    step: Option<f64>,
    /// Skip the simulation oracle
    #[arg(long)]
    no_simulate: bool,
    /// Structure file overriding the problem's [structure] table
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Report file (TOML)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            epsilon: self.epsilon,
            feas_tol: self.feas_tol,
            w_cap: self.w_cap,
            horizon: self.horizon,
            step: self.step,
            no_simulate: self.no_simulate,
            structure: self.structure.clone(),
            csv: self.csv.clone(),
        }
    }
}

fn init_logging() {
    let level = match std::env::var("ASYMLYAP_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => {
            eprintln!("ASYMLYAP_LOG={other} not recognised (quiet, info, debug); using warnings only");
            log::LevelFilter::Warn
        }
        Err(_) => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let start = Instant::now();

    let (name, common) = match &cli.command {
        Command::Design { common, .. } => ("design", common),
        Command::Riccati { common, .. } => ("riccati", common),
        Command::Verify { common, .. } => ("verify", common),
        Command::Consensus { common, .. } => ("consensus", common),
    };
    let settings = common.settings();
    let mut report = Report::new(name);
    let result = match &cli.command {
        Command::Design { input, .. } => commands::cmd_design(input, &settings, &mut report),
        Command::Riccati { input, .. } => commands::cmd_riccati(input, &settings, &mut report),
        Command::Verify { input, gain, gamma, .. } => {
            commands::cmd_verify(input, gain, *gamma, &settings, &mut report)
        }
        Command::Consensus {
            file,
            agents,
            pole,
            q,
            r,
            states,
            ..
        } => {
            let args = ConsensusArgs {
                file: file.clone(),
                agents: *agents,
                pole: *pole,
                q: *q,
                r: *r,
                states: states.clone(),
            };
            commands::cmd_consensus(&args, &settings, &mut report)
        }
    };

    let (code, status) = match &result {
        Ok(EXIT_OK) => (EXIT_OK, "ok".to_string()),
        Ok(c) => (*c, "verification failed".to_string()),
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), e.to_string())
        }
    };
    // reports are written for completed runs and for infeasible problems;
    // unusable input gets none
    if let Some(path) = &common.out {
        if matches!(code, EXIT_OK | EXIT_INFEASIBLE | EXIT_BOUND_VIOLATED) {
            report.finish(code, &status, start.elapsed().as_secs_f64());
            if let Err(e) = report.write(path) {
                eprintln!("error: {e}");
                return ExitCode::from(CliError::exit_code(&e) as u8);
            }
        }
    }
    ExitCode::from(code as u8)
}
