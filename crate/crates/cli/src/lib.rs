//! Command-line front end for `spinchain`.
//!
//! Every command produces a deterministic payload (JSON, CSV or text) and an
//! exit status: 0 when all checks pass, 1 when a numerical check fails, 2 on
//! a usage error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod render;

#[cfg(test)]
mod end_to_end;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable naming the directory for relative `--output` paths.
pub const OUTPUT_DIR_ENV: &str = "SPINCHAIN_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "spinchain",
    version,
    about = "Three-spin permutation dynamics, its quantum lift and perturbation sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the payload to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Directory that relative `--output` paths are resolved against.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build permutation operators from transpositions and check their algebra.
    Ops(commands::OpsArgs),
    /// Eigenvalues and eigenvectors of the chain cycle or an N-state cogwheel.
    Spectrum(commands::SpectrumArgs),
    /// Check the finite BCH identity of the three-spin cycle.
    Bch(commands::BchArgs),
    /// Apply one perturbed evolution operator to an ontological state.
    Perturb(commands::PerturbArgs),
    /// Long-format amplitude table over several ε values and inputs.
    Sweep(commands::SweepArgs),
    /// Sample a band-limited signal and reconstruct it with the sinc series.
    Sample(commands::SampleArgs),
    /// Run the twelve acceptance criteria and print a summary table.
    VerifyAll,
}

/// A finished command: its payload and whether its checks passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub payload: String,
    pub success: bool,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn ok(payload: String) -> Self {
        Outcome {
            payload,
            success: true,
            warnings: Vec::new(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.success {
            EXIT_OK
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad input from the user.
    Usage(String),
    /// A computation could not be carried out.
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_CHECK_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<spinchain::Error> for CliError {
    fn from(e: spinchain::Error) -> Self {
        use spinchain::Error::*;
        match e {
            Degenerate(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Runs one parsed command and returns its payload.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let format = cli.output.format;
    match &cli.command {
        Command::Ops(a) => commands::ops(a, format.unwrap_or(Format::Text)),
        Command::Spectrum(a) => commands::spectrum(a, format.unwrap_or(Format::Json)),
        Command::Bch(a) => commands::bch(a, format.unwrap_or(Format::Json)),
        Command::Perturb(a) => commands::perturb(a, format.unwrap_or(Format::Json)),
        Command::Sweep(a) => commands::sweep(a, format.unwrap_or(Format::Csv)),
        Command::Sample(a) => commands::sample(a, format.unwrap_or(Format::Csv)),
        Command::VerifyAll => commands::verify_all(format.unwrap_or(Format::Text)),
    }
}

fn resolve_output(args: &OutputArgs) -> Option<PathBuf> {
    let path = args.output.as_ref()?;
    match &args.output_dir {
        Some(dir) if path.is_relative() => Some(dir.join(path)),
        _ => Some(path.clone()),
    }
}

fn write_payload(
    path: Option<&Path>,
    payload: &str,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| CliError::Io(e.to_string()))?;
            }
            std::fs::write(p, payload).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => stdout
            .write_all(payload.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Parses `args`, runs the command, writes the payload and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        args,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

/// Like [`run`], with explicit streams for the payload and for diagnostics.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = execute(&cli).and_then(|outcome| {
        for w in &outcome.warnings {
            let _ = writeln!(stderr, "spinchain: warning: {w}");
        }
        write_payload(
            resolve_output(&cli.output).as_deref(),
            &outcome.payload,
            stdout,
        )?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(stderr, "spinchain: {e}");
            e.exit_code()
        }
    }
}
