//! `bmo`: run BMO swarm experiments from TOML configs, analyze and render traces.

mod experiment;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use bmo_core::{render_svg, summarize, Trace};
use clap::{Parser, Subcommand};

use crate::output::write_atomic;

#[derive(Parser)]
#[command(name = "bmo", version, about = "Butterfly mating optimization experiments")]
struct Cli {
    /// Directory for outputs (overrides `output_dir` in the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run a single seed instead of the configured ensemble.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Suppress progress messages.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed (and sweep value, if any) of a config.
    Run { config: PathBuf },
    /// Like `run`, but the config must contain a `[sweep]` section.
    Sweep { config: PathBuf },
    /// Print a JSON summary for each trace file.
    Analyze {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Agents required near a peak for it to count as captured.
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Capture radius; defaults to the one recorded in the trace.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Draw agent paths of a trace as SVG.
    Render { trace: PathBuf, out: PathBuf },
}

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run { config } => run_config(cli, config, false),
        Command::Sweep { config } => run_config(cli, config, true),
        Command::Analyze {
            traces,
            min_count,
            radius,
        } => analyze(cli, traces, *min_count, *radius),
        Command::Render { trace, out } => {
            let trace = read_trace(trace)?;
            write_atomic(out, render_svg(&trace).as_bytes())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_config(cli: &Cli, path: &Path, need_sweep: bool) -> Result<ExitCode> {
    let loaded = match experiment::load(path, cli.seed_override)? {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    if need_sweep && loaded.config.sweep.is_none() {
        eprintln!("error: {}: missing [sweep] section", path.display());
        return Ok(ExitCode::from(EXIT_CONFIG));
    }
    let outcome = experiment::execute(&loaded, cli.out_dir.as_deref(), cli.quiet)?;
    if !cli.quiet {
        eprintln!("{} runs written to {}", outcome.runs, outcome.out_dir.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Trace::from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

fn analyze(cli: &Cli, paths: &[PathBuf], min_count: usize, radius: Option<f64>) -> Result<ExitCode> {
    let mut summaries = Vec::with_capacity(paths.len());
    for path in paths {
        let trace = read_trace(path)?;
        summaries.push(summarize(&trace, None, radius, min_count, None));
    }
    let mut json = serde_json::to_string_pretty(&summaries)?;
    json.push('\n');
    print!("{json}");
    if let Some(dir) = &cli.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_atomic(&dir.join("analysis.json"), json.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}
