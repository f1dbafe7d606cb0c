//! CSV output and bound verification.
//!
//! Result files have one `run` row per (policy, permutation) followed by
//! one `summary` row per policy:
//!
//! ```text
//! row,dataset,policy,seed,T,N,eta,delta,rho,Q,query_ratio_pct,forecaster_loss,
//! best_expert_loss,regret_rate_pct,wall_time_s,runs,query_ratio_pct_std,regret_rate_pct_std
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so values read back
//! are bit-identical to the ones written.

use std::io::{Read, Write};
use std::path::Path;

use crate::active::Trace;
use crate::analysis::{Algorithm, RunResult, Summary};
use crate::error::{Error, Result};

use super::experiment::SweepPoint;

pub const RESULT_HEADER: [&str; 18] = [
    "row",
    "dataset",
    "policy",
    "seed",
    "T",
    "N",
    "eta",
    "delta",
    "rho",
    "Q",
    "query_ratio_pct",
    "forecaster_loss",
    "best_expert_loss",
    "regret_rate_pct",
    "wall_time_s",
    "runs",
    "query_ratio_pct_std",
    "regret_rate_pct_std",
];

pub const SWEEP_HEADER: [&str; 8] = [
    "delta",
    "policy",
    "runs",
    "query_ratio_pct_mean",
    "query_ratio_pct_std",
    "regret_rate_pct_mean",
    "regret_rate_pct_std",
    "wall_time_s",
];

pub const TRACE_HEADER: [&str; 5] = ["round", "label", "prediction", "pre_clip", "queried"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn run_row(dataset: &str, r: &RunResult) -> Vec<String> {
    vec![
        "run".into(),
        dataset.into(),
        r.algorithm.to_string(),
        r.seed.to_string(),
        r.rounds.to_string(),
        r.experts.to_string(),
        r.eta.to_string(),
        opt(r.delta),
        opt(r.rho),
        r.queries.to_string(),
        (100.0 * r.query_ratio).to_string(),
        r.forecaster_loss.to_string(),
        r.best_expert_loss.to_string(),
        r.regret_rate.to_string(),
        r.wall_time_seconds.to_string(),
        String::new(),
        String::new(),
        String::new(),
    ]
}

fn summary_row(dataset: &str, s: &Summary, first: &RunResult) -> Vec<String> {
    vec![
        "summary".into(),
        dataset.into(),
        s.algorithm.to_string(),
        String::new(),
        first.rounds.to_string(),
        first.experts.to_string(),
        first.eta.to_string(),
        opt(first.delta),
        String::new(),
        String::new(),
        (100.0 * s.query_ratio.mean).to_string(),
        String::new(),
        String::new(),
        s.regret_rate.mean.to_string(),
        s.wall_time_seconds.to_string(),
        s.runs.to_string(),
        (100.0 * s.query_ratio.std).to_string(),
        s.regret_rate.std.to_string(),
    ]
}

/// Writes run rows, then a summary row for each of `summaries`.
pub fn write_results<W: Write>(
    out: W,
    dataset: &str,
    results: &[RunResult],
    summaries: &[Summary],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in results {
        w.write_record(run_row(dataset, r))?;
    }
    for s in summaries {
        let first = results
            .iter()
            .find(|r| r.algorithm == s.algorithm)
            .ok_or_else(|| Error::InvalidParameter(format!("no runs for {}", s.algorithm)))?;
        w.write_record(summary_row(dataset, s, first))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for p in points {
        for s in &p.summaries {
            w.write_record([
                p.delta.to_string(),
                s.algorithm.to_string(),
                s.runs.to_string(),
                (100.0 * s.query_ratio.mean).to_string(),
                (100.0 * s.query_ratio.std).to_string(),
                s.regret_rate.mean.to_string(),
                s.regret_rate.std.to_string(),
                s.wall_time_seconds.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-round rows of one run.
pub fn write_trace<W: Write>(out: W, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for t in 0..trace.rounds() {
        w.write_record([
            (t + 1).to_string(),
            trace.labels[t].to_string(),
            trace.predictions[t].value().to_string(),
            trace.pre_clip[t].to_string(),
            u8::from(trace.queried[t]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The fields of a `run` row needed to recompute its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    /// 1-based line in the file.
    pub line: u64,
    pub policy: Algorithm,
    pub seed: u64,
    pub rounds: usize,
    pub experts: usize,
    pub queries: usize,
    pub eta: f64,
    pub delta: Option<f64>,
    pub forecaster_loss: f64,
    pub best_expert_loss: f64,
}

/// Reads the `run` rows of a results file; summary rows are skipped.
pub fn read_run_rows<R: Read>(input: R, path: &Path) -> Result<Vec<RunRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("missing column {name:?}"),
            })
    };
    let idx = [
        col("row")?,
        col("policy")?,
        col("seed")?,
        col("T")?,
        col("N")?,
        col("Q")?,
        col("eta")?,
        col("delta")?,
        col("forecaster_loss")?,
        col("best_expert_loss")?,
    ];
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
        let parse_err = |what: &str, i: usize| Error::Parse {
            path: path.to_path_buf(),
            line: line as usize,
            msg: format!("bad {what} {:?}", field(i)),
        };
        match field(0) {
            "summary" => continue,
            "run" => {}
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line as usize,
                    msg: format!("unknown row kind {other:?}"),
                })
            }
        }
        let delta = match field(7) {
            "" => None,
            s => Some(s.parse().map_err(|_| parse_err("delta", 7))?),
        };
        rows.push(RunRow {
            line,
            policy: field(1).parse().map_err(|_| parse_err("policy", 1))?,
            seed: field(2).parse().map_err(|_| parse_err("seed", 2))?,
            rounds: field(3).parse().map_err(|_| parse_err("T", 3))?,
            experts: field(4).parse().map_err(|_| parse_err("N", 4))?,
            queries: field(5).parse().map_err(|_| parse_err("Q", 5))?,
            eta: field(6).parse().map_err(|_| parse_err("eta", 6))?,
            delta,
            forecaster_loss: field(8)
                .parse()
                .map_err(|_| parse_err("forecaster_loss", 8))?,
            best_expert_loss: field(9)
                .parse()
                .map_err(|_| parse_err("best_expert_loss", 9))?,
        });
    }
    Ok(rows)
}

/// Slack for floating-point accumulation in the recorded losses.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    /// One line per row.
    pub lines: Vec<String>,
    pub checked: usize,
    /// Random baselines, which carry no deterministic bound.
    pub skipped: usize,
    pub violations: usize,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn verify_rows(rows: &[RunRow]) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    for r in rows {
        let label = format!("line {} ({} seed {})", r.line, r.policy, r.seed);
        let delta = match (r.policy, r.delta) {
            (Algorithm::Active(k), None) if !k.is_random() => {
                return Err(Error::InvalidParameter(format!(
                    "{label}: active row without delta"
                )))
            }
            (_, d) => d.unwrap_or(0.0),
        };
        let Some(bound) = r.policy.bound(r.experts, r.rounds, r.queries, r.eta, delta) else {
            report.skipped += 1;
            report
                .lines
                .push(format!("{label}: skipped, no deterministic bound"));
            continue;
        };
        let regret = r.forecaster_loss - r.best_expert_loss;
        report.checked += 1;
        if regret <= bound + BOUND_SLACK {
            report
                .lines
                .push(format!("{label}: PASS regret {regret} <= bound {bound}"));
        } else {
            report.violations += 1;
            report
                .lines
                .push(format!("{label}: FAIL regret {regret} > bound {bound}"));
        }
    }
    Ok(report)
}
