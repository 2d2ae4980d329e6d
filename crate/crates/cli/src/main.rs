use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use redem::RunOptions;
use redem_cli::commands::{self, Simulation};
use redem_cli::output::write_atomic;
use redem_cli::{exit, CliError, Result, RunConfig, Table};

/// Rate functions, free-energy limits and Monte Carlo checks for random
/// energy models with random sum lengths.
///
/// Exit codes: 0 success, 2 usage, 3 configuration, 4 I/O, 5 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "redem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate phi, psi and nu over the x grid.
    Rates(Common),
    /// Tabulate the free-energy limit over the q grid.
    Limits(Common),
    /// Critical q for phi and nu at the configured beta.
    CriticalQ(Common),
    /// Tabulate the classical and generalized extreme-value limits over the q grid.
    ErGamma(Common),
    /// Interpolation rate for each configured alpha.
    Interpolate(Common),
    /// Run the configured Monte Carlo experiment.
    Simulate(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for simulations; results do not depend on it.
    #[arg(long, env = "REDEM_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn render(table: &Table, format: Format) -> Result<String> {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => Ok(table.to_json()),
    }
}

fn write_simulation(sim: &Simulation, args: &Common) -> Result<()> {
    let csv = sim.table.to_csv()?;
    let summary = sim.summary_json();
    let Some(out) = args.out.as_deref() else {
        return emit(None, if args.format == Format::Csv { &csv } else { &summary });
    };
    let (csv_path, json_path) = match args.format {
        Format::Csv => (out.to_path_buf(), out.with_extension("json")),
        Format::Json => (out.with_extension("csv"), out.to_path_buf()),
    };
    if csv_path == json_path {
        return Err(CliError::Invalid(format!(
            "--out {} leaves no room for the companion file; use a .csv or .json extension",
            out.display()
        )));
    }
    write_atomic(&csv_path, &csv)?;
    write_atomic(&json_path, &summary)
}

fn run(cli: Cli) -> Result<()> {
    let (name, args) = match &cli.command {
        Command::Rates(a) => ("rates", a),
        Command::Limits(a) => ("limits", a),
        Command::CriticalQ(a) => ("critical-q", a),
        Command::ErGamma(a) => ("er-gamma", a),
        Command::Interpolate(a) => ("interpolate", a),
        Command::Simulate(a) => ("simulate", a),
    };
    let cfg = RunConfig::load(&args.config)?.resolved(args.seed)?;
    let table = match name {
        "rates" => commands::rates(&cfg)?,
        "limits" => commands::limits(&cfg)?,
        "critical-q" => commands::critical(&cfg)?,
        "er-gamma" => commands::er(&cfg)?,
        "interpolate" => commands::interpolate(&cfg)?,
        _ => {
            let opts = RunOptions {
                threads: args.threads.map(|t| t as usize),
            };
            return write_simulation(&commands::simulate(&cfg, &opts)?, args);
        }
    };
    emit(args.out.as_deref(), &render(&table, args.format)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("redem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
