//! Command-line front end: density profiles, spectra, Green functions,
//! correlators, exponent fits and the validation suite.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::{CorrMode, GreenMode, Outcome};
use config::{Format, RunConfig};
use trapcorr::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_ACCURACY: u8 = 4;

#[derive(Parser)]
#[command(name = "trapcorr", version, about = "Two-point correlators of a trapped 1D Bose gas")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for row evaluation
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Thomas-Fermi density on the x grid
    Density,
    /// Energy levels and spacings
    Spectrum {
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Green function values on the pair grid
    Green {
        #[arg(long, value_enum)]
        mode: GreenMode,
    },
    /// Two-point correlator on the pair grid
    Correlator {
        #[arg(long, value_enum, default_value = "asymptotic-auto")]
        mode: CorrMode,
    },
    /// Power-law fit of the correlator over the pair grid
    Exponent {
        #[arg(long, value_enum, default_value = "series")]
        mode: CorrMode,
    },
    /// Run every acceptance check and report
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("trapcorr: {e}");
            ExitCode::from(match e {
                Failure::Lib(Error::Config(_) | Error::Domain { .. } | Error::Usage(_)) => EXIT_CONFIG,
                Failure::Lib(Error::Accuracy { .. }) => EXIT_ACCURACY,
                _ => 1,
            })
        }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    }
    let outcome: Outcome = match &cli.command {
        Command::Density => commands::density(&cfg)?,
        Command::Spectrum { n_max } => commands::spectrum(&cfg, *n_max)?,
        Command::Green { mode } => commands::green(&cfg, *mode)?,
        Command::Correlator { mode } => commands::correlators(&cfg, *mode)?,
        Command::Exponent { mode } => commands::exponent(&cfg, *mode)?,
        Command::Validate => commands::validate(&cfg)?,
    };
    let format = cli.format.unwrap_or(match cli.command {
        // The validation report is JSON unless asked otherwise.
        Command::Validate if cfg.output == config::Output::default() => Format::Json,
        _ => cfg.output.format,
    });
    let path = cli.out.clone().or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    let mut sink: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    outcome.table.write(&cfg, format, &mut sink)?;
    sink.flush()?;
    Ok(if outcome.validation_failure {
        ExitCode::from(EXIT_VALIDATION)
    } else if outcome.accuracy_failure {
        ExitCode::from(EXIT_ACCURACY)
    } else {
        ExitCode::SUCCESS
    })
}
