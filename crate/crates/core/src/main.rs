use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hmw_core::scenario::{
    build_summary, run_scenario, write_csv, write_json, FitConfig, OutputFormat, Scenario,
};
use hmw_core::verification::acceptance;
use hmw_core::{Error, Result};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hmw",
    version,
    about = "Interferometer phase and visibility scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scan described by a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; defaults to the scenario's output.path, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Fit the two-coil model to measured data; writes a JSON report.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Check {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

/// Failure split by exit code.
enum Failure {
    Config(Error),
    Numerical(Error),
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    format: Option<Format>,
) -> std::result::Result<(), Failure> {
    let (scenario, base) = Scenario::from_file(config).map_err(Failure::Config)?;
    let resolved = scenario.resolve(&base).map_err(Failure::Config)?;
    let format = match format {
        Some(f) => f,
        None => match scenario.output.format {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        },
    };
    let out = out.or_else(|| scenario.output.path.as_ref().map(|p| base.join(p)));
    let result = (|| -> Result<()> {
        match format {
            Format::Csv => {
                let records = run_scenario(&resolved)?;
                write_csv(&records, sink(out.as_deref())?)
            }
            Format::Json => {
                let summary = build_summary(&resolved)?;
                let mut w = sink(out.as_deref())?;
                write_json(&summary, &mut w)?;
                writeln!(w)?;
                Ok(w.flush()?)
            }
        }
    })();
    result.map_err(Failure::Numerical)
}

fn fit(config: &Path, out: Option<PathBuf>) -> std::result::Result<(), Failure> {
    let (cfg, base) = FitConfig::from_file(config).map_err(Failure::Config)?;
    let report = cfg
        .run(&base, &hmw_core::hyperfine::AtomModel::li7())
        .map_err(|e| match e {
            Error::Config { .. } => Failure::Config(e),
            other => Failure::Numerical(other),
        })?;
    (|| -> Result<()> {
        let mut w = sink(out.as_deref())?;
        write_json(&report, &mut w)?;
        writeln!(w)?;
        Ok(w.flush()?)
    })()
    .map_err(Failure::Numerical)
}

fn check(out: Option<PathBuf>, format: Format) -> Result<bool> {
    let results = acceptance::run_all();
    let mut w = sink(out.as_deref())?;
    match format {
        Format::Csv => {
            for r in &results {
                writeln!(w, "{r}")?;
            }
        }
        Format::Json => {
            let rows: Vec<_> = results
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "id": r.id,
                        "name": r.name,
                        "pass": r.pass,
                        "known_unattainable": acceptance::KNOWN_UNATTAINABLE.contains(&r.id),
                        "detail": r.detail,
                    })
                })
                .collect();
            write_json(&rows, &mut w)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(results.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            format,
        } => run(&config, out, format),
        Command::Fit { config, out } => fit(&config, out),
        Command::Check { out, format } => match check(out, format) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(EXIT_CHECK_FAILED),
            Err(e) => Err(Failure::Numerical(e)),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("hmw: configuration error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("hmw: {e}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}
