//! Trajectory CSV files and JSON summaries.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use urnsim_core::{
    AgentEstimate, ConsensusClassification, Equilibrium, Record, ValidationReport,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "agent", "beta", "mu"];

pub fn trajectory_file_name(run: u64) -> String {
    format!("trajectory_{run:04}.csv")
}

/// Writes `t,agent,beta,mu` rows, agents 1-based, one block per record.
pub fn write_trajectory(path: &Path, records: &[Record]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| CliError::io(path, e.into());
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for r in records {
        for (i, (b, m)) in r.beta.iter().zip(&r.mu).enumerate() {
            w.serialize((r.t, i + 1, b, m)).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a trajectory written by [`write_trajectory`]. Every block must
/// list agents `1..=n` in order with the same `n`, and times must increase.
pub fn read_trajectory(path: &Path) -> Result<Vec<Record>> {
    let bad = |message: String| CliError::Trajectory {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| bad(e.to_string()))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(TRAJECTORY_HEADER) {
        return Err(bad(format!("header must be t,agent,beta,mu, got {:?}", header)));
    }
    let mut records: Vec<Record> = Vec::new();
    let mut n: Option<usize> = None;
    for (line, row) in rdr.deserialize::<(u64, usize, f64, f64)>().enumerate() {
        let line = line + 2;
        let (t, agent, beta, mu) = row.map_err(|e| bad(format!("line {line}: {e}")))?;
        if !((0.0..=1.0).contains(&beta) && (0.0..=1.0).contains(&mu)) {
            return Err(bad(format!("line {line}: beta and mu must lie in [0, 1]")));
        }
        let start_new = agent == 1;
        if start_new {
            if let Some(last) = records.last() {
                let len = last.beta.len();
                if *n.get_or_insert(len) != len {
                    return Err(bad(format!("line {line}: previous block has {len} agents")));
                }
                if t <= last.t {
                    return Err(bad(format!("line {line}: time {t} does not increase")));
                }
            }
            records.push(Record {
                t,
                beta: vec![beta],
                mu: vec![mu],
            });
            continue;
        }
        let Some(cur) = records.last_mut() else {
            return Err(bad(format!("line {line}: block must start at agent 1")));
        };
        if cur.t != t || agent != cur.beta.len() + 1 {
            return Err(bad(format!("line {line}: expected agent {} at t={}", cur.beta.len() + 1, cur.t)));
        }
        cur.beta.push(beta);
        cur.mu.push(mu);
    }
    match (records.last(), n) {
        (None, _) => Err(bad("no records".into())),
        (Some(last), Some(n)) if last.beta.len() != n => {
            Err(bad(format!("last block has {} agents, expected {n}", last.beta.len())))
        }
        _ => Ok(records),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::io(path, e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: u64,
    pub final_beta: Vec<f64>,
    pub file: PathBuf,
}

/// Per-agent statistics of `beta(T)` across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q05: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
    pub q95: Vec<f64>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Aggregate {
    pub fn from_finals(finals: &[Vec<f64>]) -> Self {
        let n = finals[0].len();
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut c: Vec<f64> = finals.iter().map(|b| b[i]).collect();
                c.sort_by(f64::total_cmp);
                c
            })
            .collect();
        let q = |p: f64| columns.iter().map(|c| quantile(c, p)).collect();
        Self {
            runs: finals.len(),
            mean: columns
                .iter()
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect(),
            median: q(0.5),
            q05: q(0.05),
            q25: q(0.25),
            q75: q(0.75),
            q95: q(0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub starts: usize,
    pub failures: usize,
    /// Points dropped for a residual above the configured tolerance.
    pub rejected: usize,
}

/// Numeric interior point against the two-agent closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub gamma: f64,
    pub p1: f64,
    pub p2: f64,
    pub closed_form: Option<Vec<f64>>,
    pub numeric: Option<Vec<f64>>,
    pub max_diff: Option<f64>,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearZeroSample {
    pub beta: Vec<f64>,
    pub descent: f64,
    pub gap: f64,
    pub near_equilibrium: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub samples: usize,
    pub max_descent: f64,
    /// Largest `(f^-1(beta_i) - mu_i)(f(mu_i) - beta_i)` over all samples
    /// and agents; never positive in theory.
    pub worst_sign_pair: f64,
    pub near_zero: Vec<NearZeroSample>,
    pub boundary_descent: [f64; 2],
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ConsensusClassification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equilibria: Option<Vec<Equilibrium>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<ClosedFormCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<Vec<RunResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<Aggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<Vec<AgentEstimate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovReport>,
}

impl Summary {
    pub fn new(command: &str, config: Option<RunConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            seed: None,
            validation: None,
            classification: None,
            equilibria: None,
            solver: None,
            closed_form: None,
            runs: None,
            aggregate: None,
            window: None,
            estimates: None,
            lyapunov: None,
        }
    }
}
