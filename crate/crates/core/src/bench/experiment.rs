//! The run protocol: a precomputed round table, permutations, paired random
//! baselines, and δ sweeps.

use std::fs::File;
use std::io::BufReader;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::active::{run_active_rounds, run_full_rounds, PolicyKind, QueryPolicy, Trace};
use crate::analysis::{default_eta, summarize, Algorithm, RunResult, Summary};
use crate::dataio::{load_split, permutation_orders, split, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::experts::{read_model, ExpertPool};
use crate::primitives::{BinaryLabel, Example, UnitPrediction};

/// Expert predictions and labels of a fixed stream, row-major `T × N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    experts: usize,
    preds: Vec<UnitPrediction>,
    labels: Vec<BinaryLabel>,
}

impl PredictionTable {
    pub fn build(pool: &ExpertPool, stream: &[Example]) -> Result<Self> {
        let mut preds = Vec::with_capacity(stream.len() * pool.len());
        let mut row = Vec::with_capacity(pool.len());
        for ex in stream {
            pool.evaluate_into(&ex.x, &mut row)?;
            preds.extend_from_slice(&row);
        }
        Ok(PredictionTable {
            experts: pool.len(),
            preds,
            labels: stream.iter().map(|ex| ex.y).collect(),
        })
    }

    pub fn from_rows(rows: &[Vec<UnitPrediction>], labels: Vec<BinaryLabel>) -> Result<Self> {
        let experts = rows.first().map_or(0, Vec::len);
        if experts == 0 {
            return Err(Error::InvalidParameter(
                "prediction table needs experts".into(),
            ));
        }
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != experts) {
            return Err(Error::LengthMismatch {
                expected: experts,
                got: r.len(),
            });
        }
        Ok(PredictionTable {
            experts,
            preds: rows.concat(),
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn experts(&self) -> usize {
        self.experts
    }

    pub fn row(&self, t: usize) -> &[UnitPrediction] {
        &self.preds[t * self.experts..(t + 1) * self.experts]
    }

    pub fn label(&self, t: usize) -> BinaryLabel {
        self.labels[t]
    }

    /// Rounds in the order given by `order`.
    pub fn rounds<'a>(
        &'a self,
        order: &'a [usize],
    ) -> impl Iterator<Item = (&'a [UnitPrediction], BinaryLabel)> + 'a {
        order.iter().map(move |&t| (self.row(t), self.labels[t]))
    }
}

/// One permutation of the stream and the seed that produced it. The seed
/// also drives the Bernoulli draws of random baselines run on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Permutation {
    pub seed: u64,
    pub order: Vec<usize>,
}

pub fn make_permutations(len: usize, count: usize, base_seed: u64) -> Vec<Permutation> {
    permutation_orders(len, count, base_seed)
        .into_iter()
        .enumerate()
        .map(|(k, order)| Permutation {
            seed: base_seed.wrapping_add(k as u64),
            order,
        })
        .collect()
}

/// A scored run, with its trace when requested.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub result: RunResult,
    pub trace: Option<Trace>,
}

/// Runs one algorithm on one permutation. Random baselines need `rho`.
pub fn run_algorithm(
    table: &PredictionTable,
    perm: &Permutation,
    algorithm: Algorithm,
    eta: f64,
    delta: f64,
    rho: Option<f64>,
) -> Result<(RunResult, Trace)> {
    let rounds = table.rounds(&perm.order);
    let n = table.experts();
    let (trace, delta, rho) = match algorithm {
        Algorithm::Full(kind) => (run_full_rounds(rounds, n, kind, eta)?, None, None),
        Algorithm::Active(kind) if kind.is_random() => {
            let rho = rho.ok_or_else(|| {
                Error::InvalidParameter(format!("{algorithm} needs a sampling ratio"))
            })?;
            let policy = QueryPolicy::random(kind, rho, perm.seed)?;
            (
                run_active_rounds(rounds, n, policy, eta, delta)?,
                Some(delta),
                Some(rho),
            )
        }
        Algorithm::Active(kind) => {
            let policy = match kind {
                PolicyKind::Aewaf => QueryPolicy::aewaf(),
                _ => QueryPolicy::agf(),
            };
            (
                run_active_rounds(rounds, n, policy, eta, delta)?,
                Some(delta),
                None,
            )
        }
    };
    let result = RunResult::from_trace(algorithm, perm.seed, eta, delta, rho, &trace)?;
    Ok((result, trace))
}

/// Runs `algorithms` on one permutation. A random baseline first needs its
/// active counterpart on the same permutation, whose `Q / T` becomes `ρ`;
/// the counterpart is run even when not requested.
pub fn run_permutation(
    table: &PredictionTable,
    perm: &Permutation,
    algorithms: &[Algorithm],
    eta: f64,
    delta: f64,
    keep_traces: bool,
) -> Result<Vec<RunRecord>> {
    let mut done: Vec<(Algorithm, RunRecord)> = Vec::new();
    let run = |alg: Algorithm, rho: Option<f64>, done: &mut Vec<(Algorithm, RunRecord)>| {
        if let Some((_, r)) = done.iter().find(|(a, _)| *a == alg) {
            return Ok::<_, Error>(r.result.clone());
        }
        let (result, trace) = run_algorithm(table, perm, alg, eta, delta, rho)?;
        done.push((
            alg,
            RunRecord {
                result: result.clone(),
                trace: keep_traces.then_some(trace),
            },
        ));
        Ok(result)
    };
    for &alg in algorithms {
        match alg {
            Algorithm::Active(kind) if kind.is_random() => {
                let paired = run(Algorithm::Active(kind.counterpart()), None, &mut done)?;
                run(alg, Some(paired.query_ratio), &mut done)?;
            }
            _ => {
                run(alg, None, &mut done)?;
            }
        }
    }
    Ok(algorithms
        .iter()
        .map(|alg| {
            let i = done
                .iter()
                .position(|(a, _)| a == alg)
                .expect("every algorithm ran");
            done[i].1.clone()
        })
        .collect())
}

/// Runs every permutation in parallel. The output is grouped by algorithm
/// (in the order given), then by permutation.
pub fn run_protocol(
    table: &PredictionTable,
    perms: &[Permutation],
    algorithms: &[Algorithm],
    eta: f64,
    delta: f64,
    keep_traces: bool,
) -> Result<Vec<RunRecord>> {
    let per_perm: Vec<Vec<RunRecord>> = perms
        .par_iter()
        .map(|p| run_permutation(table, p, algorithms, eta, delta, keep_traces))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(per_perm.len() * algorithms.len());
    for a in 0..algorithms.len() {
        for records in &per_perm {
            out.push(records[a].clone());
        }
    }
    Ok(out)
}

/// Summary per algorithm, in first-appearance order.
pub fn summarize_by_algorithm(results: &[RunResult]) -> Result<Vec<Summary>> {
    let mut algorithms: Vec<Algorithm> = Vec::new();
    for r in results {
        if !algorithms.contains(&r.algorithm) {
            algorithms.push(r.algorithm);
        }
    }
    algorithms
        .into_iter()
        .map(|a| {
            let runs: Vec<RunResult> = results
                .iter()
                .filter(|r| r.algorithm == a)
                .cloned()
                .collect();
            summarize(&runs)
        })
        .collect()
}

/// One δ of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub delta: f64,
    pub summaries: Vec<Summary>,
}

/// For each δ, runs the active policies on every permutation and the
/// matched random baselines at each realized ratio.
pub fn sweep(
    table: &PredictionTable,
    perms: &[Permutation],
    algorithms: &[Algorithm],
    eta: f64,
    grid: &[f64],
) -> Result<(Vec<SweepPoint>, Vec<RunResult>)> {
    if let Some(a) = algorithms.iter().find(|a| matches!(a, Algorithm::Full(_))) {
        return Err(Error::InvalidParameter(format!(
            "{a} does not depend on delta; a sweep takes active and random policies"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter("delta grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut all = Vec::new();
    for &delta in grid {
        let results: Vec<RunResult> = run_protocol(table, perms, algorithms, eta, delta, false)?
            .into_iter()
            .map(|r| r.result)
            .collect();
        points.push(SweepPoint {
            delta,
            summaries: summarize_by_algorithm(&results)?,
        });
        all.extend(results);
    }
    Ok((points, all))
}

/// The test side of a split, the pool, and its predictions on the test side.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub dataset: String,
    pub pool: ExpertPool,
    pub table: PredictionTable,
}

impl Experiment {
    pub fn new(dataset: String, pool: ExpertPool, test: &Dataset) -> Result<Self> {
        if pool.dim() < test.dim {
            return Err(Error::Model(format!(
                "model dimension {} is smaller than the data dimension {}",
                pool.dim(),
                test.dim
            )));
        }
        let table = PredictionTable::build(&pool, &test.instances)?;
        Ok(Experiment {
            dataset,
            pool,
            table,
        })
    }

    /// Loads the dataset, splits it, and reads the trained model file.
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let spec = SplitSpec::new(config.train_fraction, config.split_seed)?;
        let (ds, _, test) = load_split(config.dataset_path()?, spec)?;
        let model_path = config.model_path();
        let file = File::open(&model_path).map_err(|e| {
            Error::Model(format!(
                "cannot open model file {}: {e}; run train-experts first",
                model_path.display()
            ))
        })?;
        let pool = read_model(BufReader::new(file))?;
        Experiment::new(ds.name.clone(), pool, &test)
    }

    /// Splits and trains in memory, without touching the filesystem.
    pub fn train(ds: &Dataset, config: &ExperimentConfig) -> Result<(Self, Vec<usize>)> {
        let (train, test) = split(
            ds,
            SplitSpec::new(config.train_fraction, config.split_seed)?,
        )?;
        let (pool, mistakes) = ExpertPool::train(&train.instances, ds.dim, &config.train)?;
        Ok((Experiment::new(ds.name.clone(), pool, &test)?, mistakes))
    }

    pub fn eta(&self, config: &ExperimentConfig) -> Result<f64> {
        match config.eta {
            Some(eta) => Ok(eta),
            None => default_eta(self.table.experts(), self.table.len()),
        }
    }

    pub fn permutations(&self, config: &ExperimentConfig) -> Vec<Permutation> {
        make_permutations(self.table.len(), config.permutations, config.perm_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active::run_full_rounds;
    use crate::forecasters::ForecasterKind;

    fn up(v: &[f64]) -> Vec<UnitPrediction> {
        v.iter().map(|&x| UnitPrediction::new(x).unwrap()).collect()
    }

    fn table(t: usize) -> PredictionTable {
        let rows: Vec<Vec<UnitPrediction>> = (0..t)
            .map(|i| {
                let a = ((i * 7919) % 101) as f64 / 100.0;
                up(&[a, 1.0 - a, 0.5, ((i * 31) % 11) as f64 / 10.0])
            })
            .collect();
        let labels = (0..t).map(|i| BinaryLabel::from_bool(i % 3 != 0)).collect();
        PredictionTable::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn paired_baselines_share_seed_and_ratio() {
        let tab = table(300);
        let perms = make_permutations(tab.len(), 4, 9);
        let algs = [Algorithm::REWAF, Algorithm::RGF];
        let recs = run_protocol(&tab, &perms, &algs, 0.1, 0.2, false).unwrap();
        assert_eq!(recs.len(), 8);
        for (k, p) in perms.iter().enumerate() {
            for (a, paired) in [(0, Algorithm::AEWAF), (1, Algorithm::AGF)] {
                let r = &recs[a * 4 + k].result;
                assert_eq!(r.seed, p.seed);
                let (active, _) = run_algorithm(&tab, p, paired, 0.1, 0.2, None).unwrap();
                assert_eq!(r.rho, Some(active.query_ratio));
                assert_eq!(r.rounds, active.rounds);
            }
        }
    }

    #[test]
    fn protocol_is_deterministic_and_ordered() {
        let tab = table(200);
        let perms = make_permutations(tab.len(), 5, 0);
        let a = run_protocol(&tab, &perms, &Algorithm::ALL, 0.2, 0.2, false).unwrap();
        let b = run_protocol(&tab, &perms, &Algorithm::ALL, 0.2, 0.2, false).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let (mut x, mut y) = (x.result.clone(), y.result.clone());
            x.wall_time_seconds = 0.0;
            y.wall_time_seconds = 0.0;
            assert_eq!(x, y);
        }
        for (i, r) in a.iter().enumerate() {
            assert_eq!(r.result.algorithm, Algorithm::ALL[i / 5]);
            assert_eq!(r.result.seed, perms[i % 5].seed);
        }
    }

    #[test]
    fn permutation_reorders_rounds() {
        let tab = table(50);
        let p = &make_permutations(tab.len(), 1, 3)[0];
        let (r, trace) = run_algorithm(&tab, p, Algorithm::EWAF, 0.3, 0.0, None).unwrap();
        let rows: Vec<Vec<UnitPrediction>> = p.order.iter().map(|&t| tab.row(t).to_vec()).collect();
        let direct = run_full_rounds(
            rows.iter()
                .zip(&p.order)
                .map(|(r, &t)| (r.as_slice(), tab.label(t))),
            4,
            ForecasterKind::Ewaf,
            0.3,
        )
        .unwrap();
        assert_eq!(trace.predictions, direct.predictions);
        assert_eq!(r.queries, 50);
    }

    #[test]
    fn sweep_rejects_full_information() {
        let tab = table(20);
        let perms = make_permutations(tab.len(), 1, 0);
        assert!(sweep(&tab, &perms, &[Algorithm::EWAF], 0.1, &[0.1]).is_err());
        assert!(sweep(&tab, &perms, &[Algorithm::AEWAF], 0.1, &[]).is_err());
        let (points, runs) = sweep(&tab, &perms, &[Algorithm::AEWAF], 0.1, &[1.0]).unwrap();
        assert_eq!(points[0].summaries[0].query_ratio.mean, 0.0);
        assert_eq!(runs.len(), 1);
    }

    #[test]
    fn random_without_rho_errors() {
        let tab = table(10);
        let p = &make_permutations(10, 1, 0)[0];
        assert!(run_algorithm(&tab, p, Algorithm::REWAF, 0.1, 0.2, None).is_err());
    }
}
