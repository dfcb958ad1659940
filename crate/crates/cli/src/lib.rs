//! Command-line driver: one subcommand per module, CSV and JSON artifacts
//! stamped with the config hash and calibration version.
//!
//! Exit codes: 0 success, 2 invalid configuration (nothing written),
//! 3 module error, 4 I/O error, 5 golden-report mismatch.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zmoment_core::report::Metadata;
use zmoment_core::Calibration;

use crate::config::{read_config_file, Command, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "zmoment",
    version,
    about = "Numerical checks for the discrete second moment of zeta"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Discrete and continuous second moments over a T grid.
    Moment(Opts),
    /// Approximate functional equation against the reference |zeta|^2.
    Afe(Opts),
    /// Resonant divisor sums and their normalized size.
    Expsum(Opts),
    /// S1 decomposition and S2 main term over a T grid.
    Saddle(Opts),
    /// Continued fractions of e^(pi k) with diagnostics.
    Cf(Opts),
    /// Moment and saddle reports together, optionally checked against a golden CSV.
    Report(Opts),
    /// Refit the calibration constants and write a new calibration file.
    Calibrate(Opts),
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// Flat `key = value` file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Working precision in decimal digits.
    #[arg(long)]
    precision: Option<String>,
    /// Comma-separated T (or x) values, ascending.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Integers such as `1..4` or `1,3`.
    #[arg(long, allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// `reference` or `afe`.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    threads: Option<String>,
    /// Calibration file replacing the built-in one.
    #[arg(long)]
    calibration: Option<String>,
    /// First summation index of the discrete moment, 0 or 1.
    #[arg(long)]
    start: Option<String>,
    /// Whether to compute the continuous moment.
    #[arg(long)]
    continuous: Option<String>,
    /// Continued-fraction terms requested.
    #[arg(long)]
    terms: Option<String>,
    /// Extra log power K in the expsum normalization.
    #[arg(long)]
    bound_exponent: Option<String>,
    /// Golden CSV compared with the report body.
    #[arg(long)]
    golden: Option<String>,
    /// Version written by `calibrate`.
    #[arg(long)]
    version_tag: Option<String>,
}

impl Opts {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("precision", &self.precision),
            ("grid", &self.grid),
            ("k", &self.k),
            ("theta", &self.theta),
            ("mode", &self.mode),
            ("out", &self.out),
            ("threads", &self.threads),
            ("calibration", &self.calibration),
            ("start", &self.start),
            ("continuous", &self.continuous),
            ("terms", &self.terms),
            ("bound_exponent", &self.bound_exponent),
            ("golden", &self.golden),
            ("version_tag", &self.version_tag),
        ]
    }
}

fn split(sub: Sub) -> (Command, Opts) {
    match sub {
        Sub::Moment(o) => (Command::Moment, o),
        Sub::Afe(o) => (Command::Afe, o),
        Sub::Expsum(o) => (Command::Expsum, o),
        Sub::Saddle(o) => (Command::Saddle, o),
        Sub::Cf(o) => (Command::Cf, o),
        Sub::Report(o) => (Command::Report, o),
        Sub::Calibrate(o) => (Command::Calibrate, o),
    }
}

/// Config file entries with the command-line flags laid over them.
fn merged_values(opts: &Opts) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = match &opts.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    for (k, v) in opts.overrides() {
        if let Some(v) = v {
            values.insert(k.to_string(), v.clone());
        }
    }
    Ok(values)
}

fn load_calibration(cfg: &RunConfig) -> Result<Calibration, CliError> {
    match &cfg.calibration_path {
        Some(p) => Calibration::load(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(Calibration::builtin()),
    }
}

fn write_artifacts(cfg: &RunConfig, files: &[commands::Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    for (name, text) in files {
        let path = cfg.output_dir.join(name);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn check_golden(cfg: &RunConfig, files: &[commands::Artifact]) -> Result<(), CliError> {
    let Some(path) = &cfg.golden else {
        return Ok(());
    };
    let golden = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let primary = files
        .iter()
        .find(|(n, _)| n.ends_with(".csv"))
        .map(|(_, t)| t.as_str())
        .unwrap_or("");
    let (want, got) = (
        commands::csv_body_of(&golden),
        commands::csv_body_of(primary),
    );
    if want != got {
        let line = want
            .lines()
            .zip(got.lines())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| want.lines().count().min(got.lines().count()));
        return Err(CliError::Regression(format!(
            "{} differs from the new report at body line {}",
            path.display(),
            line + 1
        )));
    }
    Ok(())
}

/// Resolves the configuration, runs the subcommand in its own thread pool
/// and writes the artifacts.
pub fn run(command: Command, values: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    let cfg = RunConfig::resolve(command, values)?;
    let cal = load_calibration(&cfg)?;
    let meta = Metadata::new(cfg.hash(&cal.version), &cal.version);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let files = pool.install(|| commands::execute(&cfg, &cal, &meta))?;
    write_artifacts(&cfg, &files)?;
    check_golden(&cfg, &files)?;
    Ok(cfg)
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::Config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    let (command, opts) = split(cli.command);
    let result = merged_values(&opts).and_then(|values| run(command, &values));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
