//! Run traces and their CSV form.
//!
//! ```text
//! # bmo-trace 1
//! # seed: 7
//! # meta: {"name":"four-bots","field":{...},"params":{...},...}
//! iter,agent_id,x0,x1,fitness_true,fitness_meas,uv,lmate
//! 0,0,1.0000000000000000e0,1.0000000000000000e0,...,
//! ```
//!
//! Reals are written with 17 significant digits so a trace read back is
//! bit-identical to the one written.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{BmoError, Result};
use crate::field::FieldSpec;
use crate::kernel::{InitSpec, SwarmState};
use crate::params::BmoParams;

pub const TRACE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# bmo-trace";

/// Swarm snapshot after one step (or the initial placement for `iter = 0`).
///
/// `fitness_true` and `fitness_meas` are the values the step acted on,
/// sampled at the positions held before the move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: u64,
    pub positions: Vec<Vec<f64>>,
    pub fitness_true: Vec<f64>,
    pub fitness_meas: Vec<f64>,
    pub uv: Vec<f64>,
    pub lmates: Vec<Option<usize>>,
}

impl IterationRecord {
    pub fn from_state(state: &SwarmState, fitness_true: Vec<f64>, fitness_meas: Vec<f64>) -> Self {
        IterationRecord {
            iter: state.iter,
            positions: state.positions(),
            fitness_true,
            fitness_meas,
            uv: state.uv(),
            lmates: state.lmates(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.positions.len()
    }
}

/// Everything needed to reproduce a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub name: String,
    pub field: FieldSpec,
    pub params: BmoParams,
    pub init: InitSpec,
    pub sensor_sigma: f64,
    pub capture_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub records: Vec<IterationRecord>,
}

fn real(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").unwrap();
}

impl Trace {
    pub fn n_agents(&self) -> usize {
        self.records.first().map_or(0, IterationRecord::n_agents)
    }

    pub fn dimension(&self) -> usize {
        self.records
            .first()
            .and_then(|r| r.positions.first())
            .map_or(0, Vec::len)
    }

    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Positions of one agent over the whole run.
    pub fn path(&self, agent: usize) -> Vec<&[f64]> {
        self.records
            .iter()
            .map(|r| r.positions[agent].as_slice())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let dim = self.dimension();
        let mut out = String::new();
        writeln!(out, "{MAGIC} {TRACE_FORMAT_VERSION}").unwrap();
        writeln!(out, "# seed: {}", self.meta.params.seed).unwrap();
        writeln!(
            out,
            "# meta: {}",
            serde_json::to_string(&self.meta).expect("trace metadata serializes")
        )
        .unwrap();
        out.push_str("iter,agent_id");
        for k in 0..dim {
            write!(out, ",x{k}").unwrap();
        }
        out.push_str(",fitness_true,fitness_meas,uv,lmate\n");
        for r in &self.records {
            for i in 0..r.n_agents() {
                write!(out, "{},{}", r.iter, i).unwrap();
                for v in &r.positions[i] {
                    out.push(',');
                    real(&mut out, *v);
                }
                for v in [r.fitness_true[i], r.fitness_meas[i], r.uv[i]] {
                    out.push(',');
                    real(&mut out, v);
                }
                out.push(',');
                if let Some(l) = r.lmates[i] {
                    write!(out, "{l}").unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Trace> {
        let err = |line: usize, message: String| BmoError::TraceFormat { line, message };
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

        let (n, first) = lines.next().ok_or_else(|| err(1, "empty trace".into()))?;
        let version = first
            .strip_prefix(MAGIC)
            .map(str::trim)
            .ok_or_else(|| err(n, format!("expected '{MAGIC} <version>' header")))?;
        if version != TRACE_FORMAT_VERSION.to_string() {
            return Err(err(n, format!("unsupported trace version {version}")));
        }

        let mut meta: Option<TraceMeta> = None;
        let mut header: Option<(usize, Vec<String>)> = None;
        for (n, line) in lines.by_ref() {
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(json) = comment.trim_start().strip_prefix("meta:") {
                    meta = Some(
                        serde_json::from_str(json.trim())
                            .map_err(|e| err(n, format!("bad metadata: {e}")))?,
                    );
                }
                continue;
            }
            header = Some((n, line.split(',').map(str::to_owned).collect()));
            break;
        }
        let meta = meta.ok_or_else(|| err(1, "missing '# meta:' line".into()))?;
        let (hn, header) = header.ok_or_else(|| err(1, "missing column header".into()))?;
        let dim = header.len().saturating_sub(6);
        let mut expected = vec!["iter".to_owned(), "agent_id".to_owned()];
        expected.extend((0..dim).map(|k| format!("x{k}")));
        expected.extend(["fitness_true", "fitness_meas", "uv", "lmate"].map(String::from));
        if header != expected || !(2..=3).contains(&dim) {
            return Err(err(hn, format!("unexpected column header {header:?}")));
        }

        let mut records: Vec<IterationRecord> = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != dim + 6 {
                return Err(err(n, format!("expected {} columns, got {}", dim + 6, cols.len())));
            }
            let int = |s: &str| s.parse::<u64>().map_err(|e| err(n, format!("{s:?}: {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(n, format!("{s:?}: {e}")));
            let iter = int(cols[0])?;
            let agent = int(cols[1])? as usize;
            let position = cols[2..2 + dim].iter().map(|s| num(s)).collect::<Result<_>>()?;
            let fitness_true = num(cols[dim + 2])?;
            let fitness_meas = num(cols[dim + 3])?;
            let uv = num(cols[dim + 4])?;
            let lmate = match cols[dim + 5] {
                "" => None,
                s => Some(int(s)? as usize),
            };

            if agent == 0 {
                if let Some(prev) = records.last() {
                    if iter <= prev.iter {
                        return Err(err(n, format!("iteration {iter} out of order")));
                    }
                }
                records.push(IterationRecord {
                    iter,
                    positions: Vec::new(),
                    fitness_true: Vec::new(),
                    fitness_meas: Vec::new(),
                    uv: Vec::new(),
                    lmates: Vec::new(),
                });
            }
            let rec = match records.last_mut() {
                Some(r) if r.iter == iter && r.positions.len() == agent => r,
                _ => return Err(err(n, format!("row for iter {iter}, agent {agent} out of order"))),
            };
            rec.positions.push(position);
            rec.fitness_true.push(fitness_true);
            rec.fitness_meas.push(fitness_meas);
            rec.uv.push(uv);
            rec.lmates.push(lmate);
        }
        if let Some(first) = records.first() {
            let n_agents = first.n_agents();
            if let Some(bad) = records.iter().find(|r| r.n_agents() != n_agents) {
                return Err(err(
                    hn,
                    format!("iteration {} has {} agents, expected {n_agents}", bad.iter, bad.n_agents()),
                ));
            }
        }
        Ok(Trace { meta, records })
    }
}
