//! Regret accounting, the closed-form regret bounds, the default learning
//! rate, and mean ± std aggregation over repeated runs.

use std::fmt;
use std::str::FromStr;

use crate::active::{PolicyKind, Trace};
use crate::error::{Error, Result};
use crate::forecasters::ForecasterKind;

/// `L_T - min_i L_{i,T}`. Negative when the forecaster beats every expert.
pub fn regret(forecaster_loss: f64, expert_losses: &[f64]) -> Result<f64> {
    if expert_losses.is_empty() {
        return Err(Error::InvalidParameter(
            "regret needs at least one expert".into(),
        ));
    }
    let best = expert_losses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(forecaster_loss - best)
}

/// Full-information bound `ln N / η + η T / 8`.
pub fn theorem1_bound(experts: usize, rounds: usize, eta: f64) -> f64 {
    (experts as f64).ln() / eta + eta * rounds as f64 / 8.0
}

/// Active bound `ln N / η + η T / 8 + δ (T - Q)`.
pub fn theorem4_bound(experts: usize, rounds: usize, queries: usize, eta: f64, delta: f64) -> f64 {
    theorem1_bound(experts, rounds, eta) + delta * (rounds as f64 - queries as f64)
}

/// `η = √(8 ln N / (T(1 + 8a) − 8aQ))` and `δ = aη`, the pair that balances
/// the active bound. Only meaningful after the run, since `Q` comes from it.
pub fn corollary5_params(
    experts: usize,
    rounds: usize,
    queries: usize,
    a: f64,
) -> Result<(f64, f64)> {
    if experts < 2 {
        return Err(Error::InvalidParameter(
            "a single expert gives η = 0; supply η explicitly".into(),
        ));
    }
    if rounds == 0 || queries > rounds {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= Q <= T and T >= 1, got Q = {queries}, T = {rounds}"
        )));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "a must be positive, got {a}"
        )));
    }
    let t = rounds as f64;
    let q = queries as f64;
    let eta = (8.0 * (experts as f64).ln() / (t * (1.0 + 8.0 * a) - 8.0 * a * q)).sqrt();
    Ok((eta, a * eta))
}

/// `√(8 ln N / T)`.
pub fn default_eta(experts: usize, rounds: usize) -> Result<f64> {
    if experts < 2 {
        return Err(Error::InvalidParameter(
            "the default learning rate is zero for a single expert; supply η explicitly".into(),
        ));
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter(
            "the default learning rate needs T >= 1".into(),
        ));
    }
    Ok((8.0 * (experts as f64).ln() / rounds as f64).sqrt())
}

/// Any of the six forecasters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Full(ForecasterKind),
    Active(PolicyKind),
}

impl Algorithm {
    pub const EWAF: Algorithm = Algorithm::Full(ForecasterKind::Ewaf);
    pub const GF: Algorithm = Algorithm::Full(ForecasterKind::Gf);
    pub const AEWAF: Algorithm = Algorithm::Active(PolicyKind::Aewaf);
    pub const AGF: Algorithm = Algorithm::Active(PolicyKind::Agf);
    pub const REWAF: Algorithm = Algorithm::Active(PolicyKind::Rewaf);
    pub const RGF: Algorithm = Algorithm::Active(PolicyKind::Rgf);

    pub const ALL: [Algorithm; 6] = [
        Algorithm::EWAF,
        Algorithm::GF,
        Algorithm::AEWAF,
        Algorithm::REWAF,
        Algorithm::AGF,
        Algorithm::RGF,
    ];

    /// The regret bound that holds deterministically for this algorithm,
    /// if any. Random baselines carry none.
    pub fn bound(
        self,
        experts: usize,
        rounds: usize,
        queries: usize,
        eta: f64,
        delta: f64,
    ) -> Option<f64> {
        match self {
            Algorithm::Full(_) => Some(theorem1_bound(experts, rounds, eta)),
            Algorithm::Active(PolicyKind::Aewaf | PolicyKind::Agf) => {
                Some(theorem4_bound(experts, rounds, queries, eta, delta))
            }
            Algorithm::Active(_) => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Full(ForecasterKind::Ewaf) => f.write_str("ewaf"),
            Algorithm::Full(ForecasterKind::Gf) => f.write_str("gf"),
            Algorithm::Active(k) => k.fmt(f),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ewaf" => Ok(Algorithm::EWAF),
            "gf" => Ok(Algorithm::GF),
            other => other
                .parse::<PolicyKind>()
                .map(Algorithm::Active)
                .map_err(|_| Error::InvalidParameter(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Metrics of one forecasting run, plus what is needed to reproduce it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rounds: usize,
    pub queries: usize,
    pub experts: usize,
    pub eta: f64,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub forecaster_loss: f64,
    pub best_expert_loss: f64,
    /// `100 · R / T`.
    pub regret_rate: f64,
    /// `Q / T`.
    pub query_ratio: f64,
    pub wall_time_seconds: f64,
}

impl RunResult {
    pub fn from_trace(
        algorithm: Algorithm,
        seed: u64,
        eta: f64,
        delta: Option<f64>,
        rho: Option<f64>,
        trace: &Trace,
    ) -> Result<Self> {
        let rounds = trace.rounds();
        if rounds == 0 {
            return Err(Error::InvalidParameter("cannot score an empty run".into()));
        }
        let best = trace.best_expert_loss();
        let r = regret(trace.forecaster_loss, &trace.expert_losses)?;
        Ok(RunResult {
            algorithm,
            seed,
            rounds,
            queries: trace.query_count,
            experts: trace.expert_losses.len(),
            eta,
            delta,
            rho,
            forecaster_loss: trace.forecaster_loss,
            best_expert_loss: best,
            regret_rate: 100.0 * r / rounds as f64,
            query_ratio: trace.query_count as f64 / rounds as f64,
            wall_time_seconds: trace.elapsed.as_secs_f64(),
        })
    }

    pub fn regret(&self) -> f64 {
        self.forecaster_loss - self.best_expert_loss
    }

    pub fn bound(&self) -> Option<f64> {
        self.algorithm.bound(
            self.experts,
            self.rounds,
            self.queries,
            self.eta,
            self.delta.unwrap_or(0.0),
        )
    }
}

/// Mean and sample standard deviation of a metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidParameter("no values to summarize".into()));
        }
        // Anchored at the first value so identical inputs give exactly zero spread.
        let anchor = values[0];
        let mean = anchor + values.iter().map(|v| v - anchor).sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Ok(MeanStd { mean, std })
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.mean, self.std)
    }
}

/// Aggregate over the runs of one algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub runs: usize,
    /// Percent.
    pub regret_rate: MeanStd,
    /// Fraction in `[0, 1]`.
    pub query_ratio: MeanStd,
    pub wall_time_seconds: f64,
}

pub fn summarize(results: &[RunResult]) -> Result<Summary> {
    let Some(first) = results.first() else {
        return Err(Error::InvalidParameter("no runs to summarize".into()));
    };
    if let Some(r) = results.iter().find(|r| r.algorithm != first.algorithm) {
        return Err(Error::InvalidParameter(format!(
            "cannot summarize {} together with {}",
            first.algorithm, r.algorithm
        )));
    }
    let regrets: Vec<f64> = results.iter().map(|r| r.regret_rate).collect();
    let ratios: Vec<f64> = results.iter().map(|r| r.query_ratio).collect();
    Ok(Summary {
        algorithm: first.algorithm,
        runs: results.len(),
        regret_rate: MeanStd::of(&regrets)?,
        query_ratio: MeanStd::of(&ratios)?,
        wall_time_seconds: results.iter().map(|r| r.wall_time_seconds).sum::<f64>()
            / results.len() as f64,
    })
}
