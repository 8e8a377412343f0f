//! Expands a config into runs, executes them in parallel and writes outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bmo_core::config::SCHEMA_VERSION;
use bmo_core::{
    render_svg, simulate, summarize, ConfigError, ExperimentConfig, RunSpec, RunSummary,
    SweepPoint,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::write_atomic;

/// A config error with the file it came from, printed with a line anchor.
#[derive(Debug)]
pub struct ConfigFailure {
    pub path: PathBuf,
    pub line: Option<usize>,
    pub error: ConfigError,
}

impl std::fmt::Display for ConfigFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{line}: {}", self.path.display(), self.error),
            None => write!(f, "{}: {}", self.path.display(), self.error),
        }
    }
}

impl std::error::Error for ConfigFailure {}

pub struct Loaded {
    pub config: ExperimentConfig,
    pub runs: Vec<RunSpec>,
}

/// Reads and validates a config. `Ok(Err(_))` is a config problem (exit 2);
/// the outer error is an I/O problem (exit 1).
pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Result<Loaded, ConfigFailure>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let fail = |error: ConfigError| ConfigFailure {
        path: path.to_owned(),
        line: error.line(&text),
        error,
    };
    let mut config = match ExperimentConfig::from_toml_str(&text) {
        Ok(c) => c,
        Err(e) => return Ok(Err(fail(e))),
    };
    if let Some(seed) = seed_override {
        config.params.seed = seed;
        config.ensemble = Default::default();
    }
    Ok(config.runs().map(|runs| Loaded { config, runs }).map_err(fail))
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    schema_version: u32,
    name: &'a str,
    config: &'a ExperimentConfig,
    runs: Vec<RunSummary>,
}

pub struct Outcome {
    pub out_dir: PathBuf,
    pub runs: usize,
}

pub fn execute(loaded: &Loaded, out_dir: Option<&Path>, quiet: bool) -> Result<Outcome> {
    let config = &loaded.config;
    let out_dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new("out").join(&config.name));
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let emit = &config.emit;
    let summaries = loaded
        .runs
        .par_iter()
        .map(|run| -> Result<RunSummary> {
            let stem = run.stem();
            let trace = simulate(&run.scenario).with_context(|| format!("run {stem}"))?;
            if emit.trace {
                write_atomic(
                    &out_dir.join(format!("trace_{stem}.csv")),
                    trace.to_csv().as_bytes(),
                )?;
            }
            if emit.svg {
                write_atomic(
                    &out_dir.join(format!("paths_{stem}.svg")),
                    render_svg(&trace).as_bytes(),
                )?;
            }
            let sweep = run.sweep.as_ref().map(|(parameter, value)| SweepPoint {
                parameter: parameter.clone(),
                value: *value,
            });
            let summary = summarize(
                &trace,
                config.peaks_for(&run.scenario),
                None,
                config.analysis.min_count,
                sweep,
            );
            if !quiet {
                eprintln!("done {stem}");
            }
            Ok(summary)
        })
        .collect::<Result<Vec<_>>>()?;

    if emit.summary {
        let file = SummaryFile {
            schema_version: SCHEMA_VERSION,
            name: &config.name,
            config,
            runs: summaries,
        };
        let mut json = serde_json::to_string_pretty(&file)?;
        json.push('\n');
        write_atomic(&out_dir.join("summary.json"), json.as_bytes())?;
    }
    Ok(Outcome {
        out_dir,
        runs: loaded.runs.len(),
    })
}
