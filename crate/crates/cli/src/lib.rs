//! Command-line front end for `meanineq`: evaluation of means and
//! deficiencies, full analysis reports and the self-test gate.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod analyze;
pub mod config;
pub mod eval;
pub mod report;
pub mod selftest;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Holds = 0,
    FailsWithWitness = 1,
    Inconclusive = 2,
    Config = 64,
    Domain = 65,
    Internal = 70,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { status: ExitStatus::Config, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError { status: ExitStatus::Domain, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<meanineq::Error> for CliError {
    fn from(e: meanineq::Error) -> Self {
        use meanineq::Error as E;
        let status = match e {
            E::Domain(_) => ExitStatus::Domain,
            E::Numeric(_) | E::Capability(_) => ExitStatus::Internal,
            E::Shape(_) | E::Contract(_) | E::InvalidSpec(_) => ExitStatus::Config,
        };
        CliError { status, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "meanineq", version, about = "Analyze Hölder- and Minkowski-type inequalities between means")]
pub struct Cli {
    /// Problem description (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for random sampling; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Points per axis for grid scans; overrides the config.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Evaluation budget for counterexample search; overrides the config.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a mean, χ, Γ or one side of the inequality, e.g.
    /// `eval gini r=2 s=1 w=0.5,0.5 x=1,3`.
    Eval {
        #[arg(value_enum)]
        quantity: eval::Quantity,
        /// `key=value` arguments; vectors are comma separated, matrix rows
        /// are separated by `;`.
        args: Vec<String>,
    },
    /// Run the full local and global analysis of a config.
    Analyze,
    /// Run the invariant suites at reduced scale.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

/// Output plus exit status of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub status: ExitStatus,
}

pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MEANINEQ_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::config(format!("MEANINEQ_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot configure {threads} threads: {e}")))
}

fn load_config(cli: &Cli) -> Result<config::ProblemConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("this command needs --config <path>"))?;
    Ok(config::ProblemConfig::load(path)?.with_overrides(cli.seed, cli.grid, cli.budget))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Eval { quantity, args } => {
            let config = match cli.config {
                Some(_) => Some(load_config(cli)?),
                None => None,
            };
            let out = eval::evaluate(*quantity, args, config.as_ref())?;
            Ok(Outcome { stdout: eval::render(&out, cli.format), status: ExitStatus::Holds })
        }
        Command::Analyze => {
            let config = load_config(cli)?;
            let report = analyze::analyze(&config)?;
            let status = report.verdict.exit_status();
            let stdout = match cli.format {
                Format::Machine => report::to_json(&report),
                Format::Human => report::render_human(&report),
            };
            Ok(Outcome { stdout, status })
        }
        Command::Selftest { inject_fault } => {
            let summary = selftest::run(cli.seed.unwrap_or(0), *inject_fault);
            let status = if summary.all_passed() { ExitStatus::Holds } else { ExitStatus::FailsWithWitness };
            Ok(Outcome { stdout: selftest::render(&summary, cli.format), status })
        }
    }
}

/// `v` with six significant digits and no trailing zeros.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if (-4..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp).max(0) as usize, rounded);
        trim_zeros(&s)
    } else {
        let s = format!("{rounded:.5e}");
        let (mantissa, e) = s.split_once('e').unwrap_or((&s, "0"));
        format!("{}e{e}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
