//! The four CLI commands as library functions. Each writes its files and
//! returns what the binary prints.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::experiment::{run_protocol, summarize_by_algorithm, sweep, Experiment, SweepPoint};
use super::report::{
    read_run_rows, verify_rows, write_results, write_sweep, write_trace, VerifyReport,
};
use crate::analysis::{Algorithm, RunResult, Summary};
use crate::dataio::{load_split, SplitSpec};
use crate::error::Result;
use crate::experts::{write_model, ExpertKind, ExpertPool};

pub const RESULTS_FILE: &str = "results.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_RUNS_FILE: &str = "sweep_runs.csv";

pub const SWEEP_POLICIES: [Algorithm; 4] = [
    Algorithm::AEWAF,
    Algorithm::REWAF,
    Algorithm::AGF,
    Algorithm::RGF,
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub model_path: PathBuf,
    pub train_size: usize,
    pub dim: usize,
    pub mistakes: Vec<(ExpertKind, usize)>,
}

pub fn cmd_train_experts(config: &ExperimentConfig) -> Result<TrainReport> {
    config.validate()?;
    let spec = SplitSpec::new(config.train_fraction, config.split_seed)?;
    let (ds, train, _) = load_split(config.dataset_path()?, spec)?;
    let (pool, mistakes) = ExpertPool::train(&train.instances, ds.dim, &config.train)?;
    let model_path = config.model_path();
    let mut out = create(&model_path)?;
    write_model(&pool, &mut out)?;
    out.flush()?;
    Ok(TrainReport {
        model_path,
        train_size: train.len(),
        dim: pool.dim(),
        mistakes: ExpertKind::ALL.into_iter().zip(mistakes).collect(),
    })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub eta: f64,
    pub results: Vec<RunResult>,
    pub summaries: Vec<Summary>,
}

pub fn cmd_run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let exp = Experiment::load(config)?;
    let eta = exp.eta(config)?;
    let perms = exp.permutations(config);
    let algorithms = config
        .policies
        .clone()
        .unwrap_or_else(|| Algorithm::ALL.to_vec());
    let records = run_protocol(
        &exp.table,
        &perms,
        &algorithms,
        eta,
        config.delta,
        config.traces,
    )?;
    if config.traces {
        let dir = config.out_dir.join("traces");
        for rec in &records {
            if let Some(trace) = &rec.trace {
                let name = format!("{}_seed{}.csv", rec.result.algorithm, rec.result.seed);
                write_trace(create(&dir.join(name))?, trace)?;
            }
        }
    }
    let results: Vec<RunResult> = records.into_iter().map(|r| r.result).collect();
    let summaries = summarize_by_algorithm(&results)?;
    let csv_path = config.out_dir.join(RESULTS_FILE);
    write_results(create(&csv_path)?, &exp.dataset, &results, &summaries)?;
    Ok(RunReport {
        csv_path,
        eta,
        results,
        summaries,
    })
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub sweep_path: PathBuf,
    pub runs_path: PathBuf,
    pub eta: f64,
    pub points: Vec<SweepPoint>,
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    config.validate()?;
    let exp = Experiment::load(config)?;
    let eta = exp.eta(config)?;
    let perms = exp.permutations(config);
    let algorithms = config
        .policies
        .clone()
        .unwrap_or_else(|| SWEEP_POLICIES.to_vec());
    let (points, runs) = sweep(&exp.table, &perms, &algorithms, eta, &config.deltas)?;
    let sweep_path = config.out_dir.join(SWEEP_FILE);
    write_sweep(create(&sweep_path)?, &points)?;
    let runs_path = config.out_dir.join(SWEEP_RUNS_FILE);
    write_results(create(&runs_path)?, &exp.dataset, &runs, &[])?;
    Ok(SweepReport {
        sweep_path,
        runs_path,
        eta,
        points,
    })
}

pub fn cmd_verify_bounds(csv_path: &Path) -> Result<VerifyReport> {
    let rows = read_run_rows(File::open(csv_path)?, csv_path)?;
    verify_rows(&rows)
}
