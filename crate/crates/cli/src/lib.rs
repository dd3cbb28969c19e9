//! Command-line front end for `lawless-core`.
//!
//! A run is `(subcommand, flags, seed)`; the report it writes embeds all
//! three together with the resolved inputs, so two runs with the same
//! configuration produce the same bytes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod born;
mod holonomy;
mod modular;
mod phenomenon;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use report::{Check, Report, Status};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("bad flag: {0}")]
    BadFlag(String),
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("tolerance cannot be met: {0}")]
    Tolerance(String),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(
    name = "lawless",
    version,
    about = "Deterministic runs of the lawless numerics"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Probabilities from equal-weight branch counting.
    Born(born::BornArgs),
    /// Seeded trial logs, conditional tables and time direction.
    Phenomenon(phenomenon::PhenomenonArgs),
    /// Modular momentum exchange between two displaced packets.
    Modular(modular::ModularArgs),
    /// Path-ordered holonomy and its checks.
    Holonomy(holonomy::HolonomyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Born(_) => "born",
            Command::Phenomenon(_) => "phenomenon",
            Command::Modular(_) => "modular",
            Command::Holonomy(_) => "holonomy",
        }
    }
}

/// What a subcommand hands back: the JSON payload, its CSV rendering and the
/// tolerance checks that decide the exit code.
pub struct Artifact {
    pub resolved: serde_json::Value,
    pub result: serde_json::Value,
    pub csv: String,
    pub checks: Vec<Check>,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one configuration and writes its report.
pub fn run(config: &RunConfig) -> Result<i32, CliError> {
    log::info!(
        "running {} with seed {}",
        config.command.name(),
        config.seed
    );
    let artifact = match &config.command {
        Command::Born(a) => born::run(a)?,
        Command::Phenomenon(a) => phenomenon::run(a, config.seed)?,
        Command::Modular(a) => modular::run(a)?,
        Command::Holonomy(a) => holonomy::run(a, config.seed)?,
    };
    let report = Report::new(config, artifact.resolved, artifact.result, artifact.checks);
    for c in report.checks.iter().filter(|c| !c.pass) {
        log::warn!("{}: {} not {} {}", c.name, c.value, c.relation, c.limit);
    }
    let text = match config.format {
        Format::Json => report.to_json(),
        Format::Csv => artifact.csv,
    };
    write_output(config.out.as_deref(), text.as_bytes())?;
    Ok(match report.status {
        Status::Ok => EXIT_OK,
        Status::ToleranceFailure => EXIT_TOLERANCE,
    })
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::FileNotFound(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn schema(path: &Path, message: impl ToString) -> CliError {
    CliError::Schema {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub(crate) fn invalid(e: impl ToString) -> CliError {
    CliError::Invalid(e.to_string())
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report values serialize")
}

pub(crate) fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Comma-separated list of numbers, as one flag value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NumList(pub Vec<f64>);

impl FromStr for NumList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<_, _>>()
            .map(NumList)
    }
}

impl std::ops::Deref for NumList {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
