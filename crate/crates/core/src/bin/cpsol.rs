use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cpsol::harness::{compare_summaries, load_config, parse_grid_axis, run_experiment, run_sweep, with_overrides};
use cpsol::{Error, Result};

#[derive(Parser)]
#[command(name = "cpsol", version, about = "Cellular multi-swarm PSO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Cartesian product of `key=v1,v2` axes, one subdirectory per point.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combine every summary.csv under a directory into comparison.csv.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, runs, out } => {
            let mut overrides = Vec::new();
            if let Some(s) = seed {
                overrides.push(("run.seed".to_string(), s.to_string()));
            }
            if let Some(r) = runs {
                overrides.push(("run.runs".to_string(), r.to_string()));
            }
            if let Some(o) = out {
                overrides.push(("run.out".to_string(), o.display().to_string()));
            }
            let cfg = load_config(&with_overrides(&read(&config)?, &overrides))?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_csv());
        }
        Command::Sweep { config, grid, out } => {
            let text = read(&config)?;
            let axes = grid.iter().map(|g| parse_grid_axis(g)).collect::<Result<Vec<_>>>()?;
            let out = match out {
                Some(o) => o,
                None => load_config(&text)?.out_dir,
            };
            for (name, report) in run_sweep(&text, &axes, &out)? {
                println!("# {name}");
                print!("{}", report.to_csv());
            }
        }
        Command::Report { dir } => print!("{}", compare_summaries(&dir)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cpsol: {e}");
            ExitCode::FAILURE
        }
    }
}
