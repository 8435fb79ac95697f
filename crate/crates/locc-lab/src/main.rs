use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use locc_lab::report::{formula, run, sweep};

#[derive(Parser)]
#[command(name = "locc-lab", version, about = "One-way LOCC protocol runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run config and write its report.
    Run {
        /// JSON config path.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-execute a config across a parameter grid and emit a cost table.
    Sweep {
        /// JSON config path.
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long)]
        grid: String,
    },
    /// Print the closed-form cost target for a protocol.
    Formulas {
        /// Protocol name, as in a run config.
        #[arg(long)]
        protocol: String,
        /// Inline JSON parameter object.
        #[arg(long)]
        params: String,
    },
}

fn read_config(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))
}

fn parse_grid(grid: &str) -> Result<Vec<f64>> {
    grid.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .with_context(|| format!("grid value {s:?} is not a number"))
        })
        .collect()
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => {
            let text = read_config(&config)?;
            let artifacts =
                run(&text, seed, out).with_context(|| format!("running {}", config.display()))?;
            match &artifacts.report_path {
                Some(path) => println!("report written to {}", path.display()),
                None => print!("{}", artifacts.report.to_json()),
            }
            for path in &artifacts.curve_paths {
                println!("curve written to {}", path.display());
            }
        }
        Command::Sweep {
            config,
            param,
            grid,
        } => {
            let text = read_config(&config)?;
            let grid = parse_grid(&grid)?;
            let (table, written) = sweep(&text, &param, &grid)
                .with_context(|| format!("sweeping {}", config.display()))?;
            if written.is_empty() {
                print!("{}", table.to_json());
            }
            for path in &written {
                println!("table written to {}", path.display());
            }
            let failed = table.failed_rows();
            if failed > 0 {
                bail!("{failed} of {} grid points failed", table.rows.len());
            }
        }
        Command::Formulas { protocol, params } => {
            let params: serde_json::Value =
                serde_json::from_str(&params).context("parsing --params")?;
            let value = formula(&protocol, &params)?;
            print!("{}", value.to_json());
        }
    }
    Ok(())
}
