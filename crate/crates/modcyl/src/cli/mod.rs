//! The `modcyl` command line: `kernel`, `verify`, `spectrum` and `plot`.
//!
//! Exit status: 0 ok, 1 verification or numerical failure, 2 invalid
//! input, 3 I/O error. `MODCYL_THREADS` caps the worker threads.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use clap::{Args, Parser, Subcommand};
use config::{load_file, LoadError, Overrides};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "modcyl", version, about = "Modular flow and Hamiltonian kernels for Dirac fermions on a cylinder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate G, the resolvent jump, flow and Hamiltonian kernels by part.
    Kernel(RunArgs),
    /// Run the acceptance criteria for the configured state.
    Verify(RunArgs),
    /// Histogram the spectrum of the discretized G against the analytic measure.
    Spectrum(RunArgs),
    /// Render kernel CSV/JSON, verify reports or spectra as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// State preset, e.g. ns-vacuum or "rim(pi/2,pi/2)".
    #[arg(long)]
    pub preset: Option<String>,
    /// Grid size.
    #[arg(long = "N", value_name = "INT")]
    pub n: Option<usize>,
    /// Modular times, comma separated.
    #[arg(long = "t", value_name = "LIST", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Subset of csv,json,svg.
    #[arg(long, value_name = "LIST")]
    pub format: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Files written by kernel, verify or spectrum.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output directory; defaults to each input's directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
    Compute(crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use crate::Error as E;
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_IO,
            CliError::Compute(e) => match e {
                E::Invalid(_) | E::StateConstraint(_) | E::InvalidState(_) | E::Domain(_) => EXIT_INVALID,
                E::Io(_) => EXIT_IO,
                E::Degenerate(_) | E::Precision(_) | E::Quadrature { .. } => EXIT_FAILED,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => f.write_str(m),
            CliError::Compute(e) => write!(f, "{e}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Compute(e)
    }
}

/// Read `MODCYL_THREADS` and size the rayon and faer pools.
pub fn configure_threads(value: Option<&str>) -> Result<(), CliError> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(CliError::Invalid(format!("MODCYL_THREADS: expected a positive integer, got `{v}`"))),
    };
    // A pool built earlier in the process wins; that is not an input error.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}

fn load(args: &RunArgs) -> Result<config::RunConfig, CliError> {
    let flags = Overrides {
        preset: args.preset.clone(),
        n: args.n,
        times: args.t.clone(),
        out: args.out.clone(),
        formats: args.format.clone(),
    };
    load_file(args.config.as_deref(), &flags).map_err(|e| match e {
        LoadError::Io(p, e) => CliError::Io(format!("{}: {e}", p.display())),
        LoadError::Invalid(d) => {
            CliError::Invalid(d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))
        }
    })
}

fn report_written(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Kernel(a) => {
            let cfg = load(&a)?;
            report_written(&commands::cmd_kernel(&cfg)?);
            Ok(EXIT_OK)
        }
        Command::Verify(a) => {
            let cfg = load(&a)?;
            let (passed, files) = commands::cmd_verify(&cfg)?;
            report_written(&files);
            Ok(if passed { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Spectrum(a) => {
            let cfg = load(&a)?;
            report_written(&commands::cmd_spectrum(&cfg)?);
            Ok(EXIT_OK)
        }
        Command::Plot(a) => {
            report_written(&commands::cmd_plot(&a.inputs, a.out.as_deref())?);
            Ok(EXIT_OK)
        }
    }
}

/// Parse arguments, run one verb, and return the exit status.
pub fn run<I, T>(args: I, threads: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = configure_threads(threads).and_then(|()| dispatch(cli));
    match result {
        Ok(code) => code,
        Err(e) => {
            match &e {
                CliError::Invalid(m) if m.starts_with("  ") => eprintln!("error: invalid configuration\n{m}"),
                _ => eprintln!("error: {e}"),
            }
            e.exit_code()
        }
    }
}
