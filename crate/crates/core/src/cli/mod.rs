//! Command-line front end: `solve`, `simulate`, `compare`, `verify` and `sweep`.

pub mod format;
pub mod random;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::complete::{backward_induction_ci, TurnOrder};
use crate::error::Error;
use crate::incomplete::{compute_eu_tables, BargainingGame};
use crate::oracle::GridSpec;
use crate::procedures::{compare_procedures, initial_beliefs, run_procedure, Procedure, SimulationOptions};
use crate::scenario::{Agent, Setting};

pub use format::{parse_scenario, serialize_scenario, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_MISMATCH: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bargain", about = "Equilibrium engine for multi-issue bargaining with deadlines")]
struct Cli {
    #[command(flatten)]
    mode: Mode,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
struct Mode {
    /// Abort when play leaves the equilibrium path (default).
    #[arg(long, global = true)]
    strict: bool,
    /// Fall back to uniform beliefs over the previous support instead of aborting.
    #[arg(long, global = true)]
    lenient: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProcedureArg {
    Package,
    Simultaneous,
    Sequential,
    All,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the equilibrium tables of the package deal.
    Solve { file: PathBuf },
    /// Simulate equilibrium play and print the transcript.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        procedure: ProcedureArg,
    },
    /// Compare the three procedures.
    Compare { file: PathBuf },
    /// Cross-check the engine against the brute-force oracles.
    Verify {
        file: PathBuf,
        #[arg(long)]
        grid: f64,
    },
    /// Generate random scenarios and write one CSV row per procedure and agent.
    Sweep {
        #[arg(long)]
        random: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to one setting; by default scenarios cycle through all five.
        #[arg(long)]
        setting: Option<Setting>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run_command<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let strict = !cli.mode.lenient;
    match dispatch(cli.command, strict, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Engine(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

fn load(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn dispatch(command: Command, strict: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let io_err = |source| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    match command {
        Command::Solve { file } => {
            let file = load(&file)?;
            let s = &file.scenario;
            let turns = TurnOrder::new(s.first_mover());
            let text = if s.setting().is_complete() {
                let eq = backward_induction_ci(
                    s.true_weights(Agent::A),
                    s.true_weights(Agent::B),
                    s.discounts(),
                    s.deadline(),
                    1,
                    turns,
                )?;
                report::render_ci(&eq)
            } else {
                let game = BargainingGame {
                    weights: s.effective_types().weight_matrix().to_vec(),
                    discounts: s.discounts().to_vec(),
                    deadline: s.deadline(),
                    turns,
                    enumeration_cap: SimulationOptions::default().enumeration_cap,
                };
                report::render_tables(&compute_eu_tables(&game, 1, &initial_beliefs(s))?)
            };
            write!(out, "setting {}\n{text}", s.setting()).map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { file, procedure } => {
            let file = load(&file)?;
            let options = file.options(strict);
            let procedures: Vec<Procedure> = match procedure {
                ProcedureArg::Package => vec![Procedure::PackageDeal],
                ProcedureArg::Simultaneous => vec![Procedure::Simultaneous],
                ProcedureArg::Sequential => vec![Procedure::Sequential],
                ProcedureArg::All => Procedure::ALL.to_vec(),
            };
            for procedure in procedures {
                let outcome = run_procedure(procedure, &file.scenario, &options)?;
                writeln!(out, "{}", report::render_outcome(&outcome)).map_err(io_err)?;
            }
            Ok(EXIT_OK)
        }
        Command::Compare { file } => {
            let file = load(&file)?;
            let report = compare_procedures(&file.scenario, &file.options(strict))?;
            write!(out, "{}", report::render_comparison(&report)).map_err(io_err)?;
            Ok(EXIT_OK)
        }
        Command::Verify { file, grid } => {
            let file = load(&file)?;
            let grid = GridSpec::new(grid)?;
            let checks = verify::verify_scenario(&file.scenario, grid, &file.options(strict))?;
            let mut failed = false;
            for check in &checks {
                failed |= check.status == verify::CheckStatus::Fail;
                writeln!(out, "{} {}: {}", check.status, check.name, check.detail).map_err(io_err)?;
            }
            Ok(if failed { EXIT_MISMATCH } else { EXIT_OK })
        }
        Command::Sweep {
            random,
            seed,
            out: path,
            setting,
        } => {
            let rows = sweep(random, seed, setting, strict)?;
            let file = fs::File::create(&path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            report::write_csv(std::io::BufWriter::new(file), &rows)?;
            writeln!(out, "wrote {} rows for {random} scenarios to {}", rows.len(), path.display()).map_err(io_err)?;
            Ok(EXIT_OK)
        }
    }
}

/// Scenario `k` is drawn from stream `k` of a ChaCha generator seeded with
/// `seed`, so any single row can be regenerated on its own.
pub fn sweep_scenario(k: usize, seed: u64, setting: Option<Setting>) -> crate::scenario::Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let setting = setting.unwrap_or(Setting::ALL[k % Setting::ALL.len()]);
    random::random_scenario(&mut rng, setting, random::Ranges::default())
}

fn sweep(count: usize, seed: u64, setting: Option<Setting>, strict: bool) -> Result<Vec<report::ResultRow>, Error> {
    let options = SimulationOptions {
        strict,
        ..SimulationOptions::default()
    };
    let mut rows = Vec::with_capacity(count * 6);
    for k in 0..count {
        let scenario = sweep_scenario(k, seed, setting);
        let report = compare_procedures(&scenario, &options)?;
        rows.extend(report::comparison_rows(k + 1, &scenario, &report, seed));
    }
    Ok(rows)
}
