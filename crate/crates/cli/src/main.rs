use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tree_zigzag::run::{cmd_report, cmd_run, cmd_simulate_data, RunConfig};

#[derive(Parser)]
#[command(
    name = "tree-zigzag",
    version,
    about = "Zig-zag and MH samplers for coalescent trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset under the infinite- or finite-sites model.
    SimulateData {
        /// Config file with key = value lines.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Where to write the dataset.
        #[arg(short, long)]
        out: PathBuf,
        /// Overrides such as `n=10 theta=2 model=fsm`.
        overrides: Vec<String>,
    },
    /// Run one or more chains and write traces and a report.
    Run {
        #[arg(short, long)]
        config: Option<PathBuf>,
        overrides: Vec<String>,
    },
    /// Compare trace files by effective sample size.
    Report {
        /// Number of grid points per trace.
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        traces: Vec<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    for o in overrides {
        cfg.set_pair(o)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::SimulateData { config, out, overrides } => {
            let cfg = load_config(config.as_ref(), &overrides)?;
            let data = cmd_simulate_data(&cfg, &out)?;
            eprintln!("wrote {} ({} leaves)", out.display(), data.n());
        }
        Command::Run { config, overrides } => {
            let cfg = load_config(config.as_ref(), &overrides)?;
            let outcome = cmd_run(&cfg)?;
            print!("{}", outcome.report.to_text());
            eprintln!("outputs in {}", cfg.out.display());
        }
        Command::Report { grid, csv, traces } => {
            let report = cmd_report(&traces, grid)?;
            print!("{}", report.to_text());
            if let Some(p) = csv {
                std::fs::write(&p, report.to_csv()?).with_context(|| format!("writing {}", p.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<tree_zigzag::Error>()
                .map(|e| e.exit_code())
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}
