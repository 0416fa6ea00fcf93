//! Command-line front end of the measurement-chain simulator.

pub mod config;
pub mod output;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::config::{parse_complex, ConfigError, ExperimentConfig, FileConfig, OutputFormat, Overrides};
use crate::report::Command;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_INVARIANT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qmeas", version, about = "Qubit measurement-chain experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Cmd {
    /// Premeasurement, seeded event sampling and observer restrictions.
    Simulate,
    /// Overlap table, purity rates and interference terms.
    Discriminate,
    /// Search for an observable separating the chain state from its branches.
    Nogo,
    /// Environment coupling and the coherence factor.
    Decohere,
    /// Every analysis.
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Discriminate => Command::Discriminate,
            Cmd::Nogo => Command::Nogo,
            Cmd::Decohere => Command::Decohere,
            Cmd::All => Command::All,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// JSON config file; flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// RNG seed.
    #[arg(long, global = true, env = "QMEAS_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    /// Number of sampled events.
    #[arg(long, global = true, value_name = "N")]
    pub events: Option<u64>,
    /// Amplitude of the first system eigenstate.
    #[arg(long, global = true, value_name = "RE[,IM]", value_parser = parse_complex, allow_hyphen_values = true)]
    pub a1: Option<Complex64>,
    /// Amplitude of the second system eigenstate.
    #[arg(long, global = true, value_name = "RE[,IM]", value_parser = parse_complex, allow_hyphen_values = true)]
    pub a2: Option<Complex64>,
    /// Phase of the conjugate spin observable.
    #[arg(long, global = true, value_name = "RAD", allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    /// Phase of the interference-term coefficient.
    #[arg(long = "c-phase", global = true, value_name = "RAD", allow_hyphen_values = true)]
    pub c_phase: Option<f64>,
    /// Number of environment qubits.
    #[arg(long = "n-env", global = true, value_name = "N")]
    pub n_env: Option<usize>,
    /// Overlap of the two environment states per qubit.
    #[arg(long = "env-overlap", global = true, value_name = "X")]
    pub env_overlap: Option<f64>,
    /// Candidates per family in the no-go search.
    #[arg(long = "nogo-samples", global = true, value_name = "N")]
    pub nogo_samples: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Record wall-clock duration (makes reports differ between runs).
    #[arg(long, global = true)]
    pub timing: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            a1: self.a1,
            a2: self.a2,
            gamma: self.gamma,
            c_phase: self.c_phase,
            n_env: self.n_env,
            env_overlap: self.env_overlap,
            n_events: self.events,
            seed: self.seed,
            nogo_samples: self.nogo_samples,
            output_path: self.out.clone(),
            output_format: self.format,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();

    let resolved = cli
        .flags
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .and_then(|file| ExperimentConfig::resolve(file.unwrap_or_default(), cli.flags.overrides()));
    let (config, warnings) = match resolved {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let n_config_warnings = warnings.len();

    let mut report = match report::run(cli.command.into(), config, warnings) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVARIANT;
        }
    };
    for w in &report.warnings[n_config_warnings..] {
        eprintln!("warning: {w}");
    }
    if cli.flags.timing {
        report.duration_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }

    let text = match report.config.output_format {
        OutputFormat::Json => output::to_json(&report).map_err(|e| e.to_string()),
        OutputFormat::Csv => output::to_csv(&report).map_err(|e| e.to_string()),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot serialize report: {e}");
            return EXIT_CONFIG;
        }
    };
    match &report.config.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => print!("{text}"),
    }

    if report.all_checks_pass {
        EXIT_OK
    } else {
        for c in report.checks.iter().filter(|c| !c.pass) {
            eprintln!(
                "invariant violated: {} = {} (expected {} within {})",
                c.name, c.value, c.expected, c.tolerance
            );
        }
        EXIT_INVARIANT
    }
}

fn config_error(e: ConfigError) -> i32 {
    eprintln!("error: {e}");
    EXIT_CONFIG
}
