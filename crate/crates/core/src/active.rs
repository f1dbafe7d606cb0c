//! Active forecasting: predictions from queried-only losses `L̂`, the two
//! confidence conditions that license skipping a label, and the Bernoulli
//! baselines that query at a fixed rate instead.
//!
//! Random policies draw from a ChaCha20 generator seeded with the policy's
//! seed on stream [`BERNOULLI_STREAM`], one draw per round, so query
//! decisions never share state with data shuffling.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::experts::ExpertPool;
use crate::forecasters::{
    ewa_value, greedy_value, ForecasterKind, ForecasterState, GreedyPrediction,
};
use crate::primitives::{abs_loss, BinaryLabel, Example, UnitPrediction};

/// ChaCha20 stream id reserved for query draws.
pub const BERNOULLI_STREAM: u64 = 1;

/// The four label-efficient forecasters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Aewaf,
    Agf,
    Rewaf,
    Rgf,
}

impl PolicyKind {
    /// The forecaster whose closed form produces `p̄ₜ`.
    pub fn base(self) -> ForecasterKind {
        match self {
            PolicyKind::Aewaf | PolicyKind::Rewaf => ForecasterKind::Ewaf,
            PolicyKind::Agf | PolicyKind::Rgf => ForecasterKind::Gf,
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, PolicyKind::Rewaf | PolicyKind::Rgf)
    }

    /// The random baseline matched to an active policy, and vice versa.
    pub fn counterpart(self) -> PolicyKind {
        match self {
            PolicyKind::Aewaf => PolicyKind::Rewaf,
            PolicyKind::Rewaf => PolicyKind::Aewaf,
            PolicyKind::Agf => PolicyKind::Rgf,
            PolicyKind::Rgf => PolicyKind::Agf,
        }
    }
}

/// Label-request rule for one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryPolicy {
    kind: PolicyKind,
    rho: Option<f64>,
    seed: Option<u64>,
}

impl QueryPolicy {
    pub fn aewaf() -> Self {
        QueryPolicy {
            kind: PolicyKind::Aewaf,
            rho: None,
            seed: None,
        }
    }

    pub fn agf() -> Self {
        QueryPolicy {
            kind: PolicyKind::Agf,
            rho: None,
            seed: None,
        }
    }

    pub fn rewaf(rho: f64, seed: u64) -> Result<Self> {
        QueryPolicy::random(PolicyKind::Rewaf, rho, seed)
    }

    pub fn rgf(rho: f64, seed: u64) -> Result<Self> {
        QueryPolicy::random(PolicyKind::Rgf, rho, seed)
    }

    pub fn random(kind: PolicyKind, rho: f64, seed: u64) -> Result<Self> {
        if !kind.is_random() {
            return Err(Error::InvalidParameter(format!(
                "{kind:?} takes no sampling rate"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidParameter(format!(
                "sampling rate {rho} outside [0, 1]"
            )));
        }
        Ok(QueryPolicy {
            kind,
            rho: Some(rho),
            seed: Some(seed),
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Skip iff the expert predictions span at most `delta`.
pub fn aewaf_condition(preds: &[UnitPrediction], delta: f64) -> bool {
    let (lo, hi) = preds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.value()), hi.max(p.value()))
        });
    hi - lo <= delta
}

/// Skip iff every expert lies within `delta` of the pre-clip greedy value.
pub fn agf_condition(preds: &[UnitPrediction], p_bar: f64, delta: f64) -> bool {
    preds.iter().all(|p| (p.value() - p_bar).abs() <= delta)
}

/// `(p̂ₜ, p̄ₜ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActivePrediction {
    pub p_hat: UnitPrediction,
    pub p_bar: f64,
}

/// Queried-loss accumulators and the query history of one active run.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveState {
    eta: f64,
    delta: f64,
    queried_losses: Vec<f64>,
    query_count: usize,
    decisions: Vec<bool>,
    // Ĥ needs labels the learner never asked for; only kept in evaluation.
    skipped_losses: Option<Vec<f64>>,
}

impl ActiveState {
    /// `delta` may be negative, which forces a query every round.
    pub fn new(eta: f64, delta: f64, experts: usize) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be finite and positive, got {eta}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance {delta} is not finite"
            )));
        }
        if experts == 0 {
            return Err(Error::InvalidParameter("no experts".into()));
        }
        Ok(ActiveState {
            eta,
            delta,
            queried_losses: vec![0.0; experts],
            query_count: 0,
            decisions: Vec::new(),
            skipped_losses: None,
        })
    }

    /// Also accumulate `Ĥ` from labels supplied through [`record_skipped`](Self::record_skipped).
    pub fn with_skipped_tracking(mut self) -> Self {
        self.skipped_losses = Some(vec![0.0; self.queried_losses.len()]);
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn queried_losses(&self) -> &[f64] {
        &self.queried_losses
    }

    pub fn skipped_losses(&self) -> Option<&[f64]> {
        self.skipped_losses.as_deref()
    }

    pub fn query_count(&self) -> usize {
        self.query_count
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn active_predict(
        &self,
        preds: &[UnitPrediction],
        kind: ForecasterKind,
    ) -> Result<ActivePrediction> {
        if preds.len() != self.queried_losses.len() {
            return Err(Error::LengthMismatch {
                expected: self.queried_losses.len(),
                got: preds.len(),
            });
        }
        let p_bar = match kind {
            ForecasterKind::Ewaf => ewa_value(self.eta, &self.queried_losses, preds),
            ForecasterKind::Gf => greedy_value(self.eta, &self.queried_losses, preds),
        };
        let g = GreedyPrediction::from_pre_clip(p_bar)?;
        Ok(ActivePrediction {
            p_hat: g.clipped,
            p_bar,
        })
    }

    fn record_query(&mut self, preds: &[UnitPrediction], y: BinaryLabel) {
        for (l, p) in self.queried_losses.iter_mut().zip(preds) {
            *l += abs_loss(*p, y);
        }
        self.query_count += 1;
        self.decisions.push(true);
    }

    /// Evaluation mode only: account the label of a skipped round into `Ĥ`.
    pub fn record_skipped(&mut self, preds: &[UnitPrediction], y: BinaryLabel) {
        if let Some(h) = &mut self.skipped_losses {
            for (l, p) in h.iter_mut().zip(preds) {
                *l += abs_loss(*p, y);
            }
        }
    }
}

/// Result of one round of [`ActiveForecaster::step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub prediction: ActivePrediction,
    pub queried: bool,
}

/// An [`ActiveState`] driven by a [`QueryPolicy`].
#[derive(Clone, Debug)]
pub struct ActiveForecaster {
    state: ActiveState,
    policy: QueryPolicy,
    sampler: Option<ChaCha20Rng>,
}

impl ActiveForecaster {
    pub fn new(policy: QueryPolicy, state: ActiveState) -> Self {
        let sampler = policy.seed.map(|seed| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(BERNOULLI_STREAM);
            rng
        });
        ActiveForecaster {
            state,
            policy,
            sampler,
        }
    }

    pub fn state(&self) -> &ActiveState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ActiveState {
        &mut self.state
    }

    pub fn into_state(self) -> ActiveState {
        self.state
    }

    pub fn policy(&self) -> &QueryPolicy {
        &self.policy
    }

    /// Predicts, decides whether to ask for the label, and on a query calls
    /// `oracle` exactly once and updates `L̂`.
    pub fn step<F>(&mut self, preds: &[UnitPrediction], oracle: F) -> Result<StepOutcome>
    where
        F: FnOnce() -> Result<BinaryLabel>,
    {
        let prediction = self.state.active_predict(preds, self.policy.kind.base())?;
        let skip = match self.policy.kind {
            PolicyKind::Aewaf => aewaf_condition(preds, self.state.delta),
            PolicyKind::Agf => agf_condition(preds, prediction.p_bar, self.state.delta),
            PolicyKind::Rewaf | PolicyKind::Rgf => {
                let rng = self.sampler.as_mut().expect("random policy carries a seed");
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                u >= self.policy.rho.unwrap_or(0.0)
            }
        };
        if skip {
            self.state.decisions.push(false);
        } else {
            let y = oracle()?;
            self.state.record_query(preds, y);
        }
        Ok(StepOutcome {
            prediction,
            queried: !skip,
        })
    }
}

/// Per-round record of a forecasting run plus its final accounting. The
/// harness knows every label, so losses are scored on all rounds even when
/// the learner skipped them.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub predictions: Vec<UnitPrediction>,
    pub pre_clip: Vec<f64>,
    pub queried: Vec<bool>,
    pub labels: Vec<BinaryLabel>,
    /// Filled by [`run_active`] and [`run_full_information`]; empty for
    /// runs over precomputed predictions.
    pub expert_predictions: Vec<Vec<UnitPrediction>>,
    pub forecaster_loss: f64,
    /// Full-information `L_{i,T}` over all rounds.
    pub expert_losses: Vec<f64>,
    pub query_count: usize,
    /// Final accumulators, for active runs.
    pub state: Option<ActiveState>,
    /// Time spent in the forecasting loop.
    pub elapsed: Duration,
}

impl Trace {
    pub fn rounds(&self) -> usize {
        self.predictions.len()
    }

    pub fn best_expert_loss(&self) -> f64 {
        self.expert_losses
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    fn empty(n: usize, cap: usize) -> Self {
        Trace {
            predictions: Vec::with_capacity(cap),
            pre_clip: Vec::with_capacity(cap),
            queried: Vec::with_capacity(cap),
            labels: Vec::with_capacity(cap),
            expert_predictions: Vec::new(),
            forecaster_loss: 0.0,
            expert_losses: vec![0.0; n],
            query_count: 0,
            state: None,
            elapsed: Duration::ZERO,
        }
    }

    fn push(
        &mut self,
        p: ActivePrediction,
        queried: bool,
        preds: &[UnitPrediction],
        y: BinaryLabel,
    ) {
        self.forecaster_loss += abs_loss(p.p_hat, y);
        for (l, f) in self.expert_losses.iter_mut().zip(preds) {
            *l += abs_loss(*f, y);
        }
        self.predictions.push(p.p_hat);
        self.pre_clip.push(p.p_bar);
        self.queried.push(queried);
        self.labels.push(y);
        self.query_count += usize::from(queried);
    }
}

/// Runs an active policy over `(expert predictions, label)` rounds. `Ĥ` is
/// tracked because every label is available here.
pub fn run_active_rounds<'a, I>(
    rounds: I,
    experts: usize,
    policy: QueryPolicy,
    eta: f64,
    delta: f64,
) -> Result<Trace>
where
    I: IntoIterator<Item = (&'a [UnitPrediction], BinaryLabel)>,
{
    let rounds = rounds.into_iter();
    let mut trace = Trace::empty(experts, rounds.size_hint().0);
    let state = ActiveState::new(eta, delta, experts)?.with_skipped_tracking();
    let mut forecaster = ActiveForecaster::new(policy, state);
    let start = Instant::now();
    for (preds, y) in rounds {
        let out = forecaster.step(preds, || Ok(y))?;
        if !out.queried {
            forecaster.state_mut().record_skipped(preds, y);
        }
        trace.push(out.prediction, out.queried, preds, y);
    }
    trace.elapsed = start.elapsed();
    trace.state = Some(forecaster.into_state());
    Ok(trace)
}

/// Runs EWAF or GF with every label revealed.
pub fn run_full_rounds<'a, I>(
    rounds: I,
    experts: usize,
    kind: ForecasterKind,
    eta: f64,
) -> Result<Trace>
where
    I: IntoIterator<Item = (&'a [UnitPrediction], BinaryLabel)>,
{
    let rounds = rounds.into_iter();
    let mut trace = Trace::empty(experts, rounds.size_hint().0);
    let mut state = ForecasterState::new(eta, experts)?;
    let start = Instant::now();
    for (preds, y) in rounds {
        let p = match kind {
            ForecasterKind::Ewaf => {
                let p = state.ewaf_predict(preds)?;
                ActivePrediction {
                    p_hat: p,
                    p_bar: p.value(),
                }
            }
            ForecasterKind::Gf => {
                let g = state.gf_predict(preds)?;
                ActivePrediction {
                    p_hat: g.clipped,
                    p_bar: g.pre_clip,
                }
            }
        };
        state.update_losses(preds, y)?;
        trace.push(p, true, preds, y);
    }
    trace.elapsed = start.elapsed();
    Ok(trace)
}

fn evaluate_stream(pool: &ExpertPool, stream: &[Example]) -> Result<Vec<Vec<UnitPrediction>>> {
    stream.iter().map(|ex| pool.evaluate(&ex.x)).collect()
}

/// Algorithm 1 over a labelled stream: the pool is evaluated on every
/// instance and the label is only revealed to the learner when it asks.
pub fn run_active(
    pool: &ExpertPool,
    stream: &[Example],
    policy: QueryPolicy,
    eta: f64,
    delta: f64,
) -> Result<Trace> {
    let preds = evaluate_stream(pool, stream)?;
    let rounds = preds.iter().zip(stream).map(|(p, ex)| (p.as_slice(), ex.y));
    let mut trace = run_active_rounds(rounds, pool.len(), policy, eta, delta)?;
    trace.expert_predictions = preds;
    Ok(trace)
}

/// Full-information counterpart of [`run_active`].
pub fn run_full_information(
    pool: &ExpertPool,
    stream: &[Example],
    kind: ForecasterKind,
    eta: f64,
) -> Result<Trace> {
    let preds = evaluate_stream(pool, stream)?;
    let rounds = preds.iter().zip(stream).map(|(p, ex)| (p.as_slice(), ex.y));
    let mut trace = run_full_rounds(rounds, pool.len(), kind, eta)?;
    trace.expert_predictions = preds;
    Ok(trace)
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Aewaf => "aewaf",
            PolicyKind::Agf => "agf",
            PolicyKind::Rewaf => "rewaf",
            PolicyKind::Rgf => "rgf",
        })
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aewaf" => Ok(PolicyKind::Aewaf),
            "agf" => Ok(PolicyKind::Agf),
            "rewaf" => Ok(PolicyKind::Rewaf),
            "rgf" => Ok(PolicyKind::Rgf),
            _ => Err(Error::InvalidParameter(format!(
                "unknown active policy {s:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::{ExpertKind, LinearExpert};
    use crate::primitives::SparseVector;

    fn up(v: &[f64]) -> Vec<UnitPrediction> {
        v.iter().map(|&x| UnitPrediction::new(x).unwrap()).collect()
    }

    #[test]
    fn aewaf_condition_examples() {
        assert!(aewaf_condition(&up(&[0.3, 0.45, 0.4]), 0.2));
        assert!(!aewaf_condition(&up(&[0.0, 1.0]), 0.2));
        assert!(aewaf_condition(&up(&[0.0, 1.0, 0.5]), 1.0));
        // Ties skip.
        assert!(aewaf_condition(&up(&[0.25, 0.5]), 0.25));
        assert!(!aewaf_condition(&up(&[0.5, 0.5]), -1e-9));
    }

    #[test]
    fn agf_condition_examples() {
        assert!(agf_condition(&up(&[0.5, 0.5]), 0.5, 0.0));
        assert!(!agf_condition(&up(&[0.2, 0.8]), 0.5, 0.2));
        assert!(agf_condition(&up(&[0.45, 0.55]), 0.5, 0.1));
    }

    #[test]
    fn active_predict_examples() {
        let s = ActiveState::new(1.0, 0.2, 2).unwrap();
        let p = s
            .active_predict(&up(&[0.2, 0.8]), ForecasterKind::Ewaf)
            .unwrap();
        assert_eq!((p.p_hat.value(), p.p_bar), (0.5, 0.5));
        let p = s
            .active_predict(&up(&[1.0, 0.0]), ForecasterKind::Gf)
            .unwrap();
        assert!((p.p_bar - 0.5).abs() < 1e-15);
        assert_eq!(p.p_hat.value(), p.p_bar);

        for eta in [0.1, 0.7, 3.0] {
            let mut s = ActiveState::new(eta, 0.2, 2).unwrap();
            s.queried_losses = vec![0.0, 2f64.ln() / eta];
            let p = s
                .active_predict(&up(&[1.0, 0.0]), ForecasterKind::Ewaf)
                .unwrap();
            assert!((p.p_bar - 2.0 / 3.0).abs() < 1e-12);
            assert_eq!(p.p_hat.value(), p.p_bar);
        }
    }

    #[test]
    fn step_skips_when_delta_is_one() {
        let mut f =
            ActiveForecaster::new(QueryPolicy::aewaf(), ActiveState::new(0.5, 1.0, 3).unwrap());
        for preds in [[0.0, 1.0, 0.5], [1.0, 1.0, 0.0]] {
            let out = f
                .step(&up(&preds), || panic!("oracle must not be called"))
                .unwrap();
            assert!(!out.queried);
        }
        assert_eq!(f.state().queried_losses(), &[0.0; 3]);
        assert_eq!(f.state().decisions(), &[false, false]);
    }

    #[test]
    fn step_queries_on_disagreement_at_zero_delta() {
        let mut f =
            ActiveForecaster::new(QueryPolicy::aewaf(), ActiveState::new(0.5, 0.0, 2).unwrap());
        let mut calls = 0;
        let out = f
            .step(&up(&[0.25, 0.75]), || {
                calls += 1;
                Ok(BinaryLabel::One)
            })
            .unwrap();
        assert!(out.queried);
        assert_eq!(calls, 1);
        assert_eq!(f.state().queried_losses(), &[0.75, 0.25]);
        assert_eq!(f.state().query_count(), 1);
    }

    #[test]
    fn oracle_failure_propagates() {
        let mut f =
            ActiveForecaster::new(QueryPolicy::agf(), ActiveState::new(0.5, -1.0, 2).unwrap());
        let err = f
            .step(&up(&[0.1, 0.2]), || {
                Err(Error::Oracle {
                    round: 0,
                    msg: "unreachable".into(),
                })
            })
            .unwrap_err();
        assert!(matches!(err, Error::Oracle { .. }));
    }

    fn stream(t: usize) -> Vec<(Vec<UnitPrediction>, BinaryLabel)> {
        (0..t)
            .map(|i| {
                let a = ((i * 7919) % 101) as f64 / 100.0;
                let b = ((i * 104_729) % 97) as f64 / 96.0;
                (up(&[a, b, 0.5]), BinaryLabel::from_bool((i * 31) % 5 < 2))
            })
            .collect()
    }

    #[test]
    fn certain_random_querying_reproduces_full_losses() {
        let s = stream(300);
        let rounds = s.iter().map(|(p, y)| (p.as_slice(), *y));
        let trace =
            run_active_rounds(rounds, 3, QueryPolicy::rewaf(1.0, 9).unwrap(), 0.3, 0.2).unwrap();
        assert_eq!(trace.query_count, 300);
        let mut full = ForecasterState::new(0.3, 3).unwrap();
        for (p, y) in &s {
            full.update_losses(p, *y).unwrap();
        }
        assert_eq!(trace.state.unwrap().queried_losses(), full.cum_losses());
    }

    #[test]
    fn zero_rate_never_queries() {
        let s = stream(200);
        let rounds = s.iter().map(|(p, y)| (p.as_slice(), *y));
        let trace =
            run_active_rounds(rounds, 3, QueryPolicy::rgf(0.0, 9).unwrap(), 0.3, 0.2).unwrap();
        assert_eq!(trace.query_count, 0);
    }

    #[test]
    fn run_active_empty_stream() {
        let pool = ExpertPool::new(vec![
            LinearExpert::new(ExpertKind::Perceptron, vec![1.0]).unwrap()
        ])
        .unwrap();
        let trace = run_active(&pool, &[], QueryPolicy::aewaf(), 0.5, 0.2).unwrap();
        assert_eq!(trace.rounds(), 0);
        assert_eq!(trace.query_count, 0);
        assert_eq!(trace.forecaster_loss, 0.0);
    }

    #[test]
    fn run_active_unanimous_experts_never_query() {
        let e = LinearExpert::new(ExpertKind::Perceptron, vec![0.2, -0.1]).unwrap();
        let pool = ExpertPool::new(vec![e.clone(), e.clone(), e]).unwrap();
        let data: Vec<Example> = (0..50)
            .map(|i| {
                Example::new(
                    SparseVector::from_dense(&[(i % 4) as f64, (i % 3) as f64]).unwrap(),
                    BinaryLabel::from_bool(i % 2 == 0),
                )
            })
            .collect();
        let trace = run_active(&pool, &data, QueryPolicy::aewaf(), 0.5, 0.0).unwrap();
        assert_eq!(trace.query_count, 0);
        for (p, preds) in trace.predictions.iter().zip(&trace.expert_predictions) {
            assert_eq!(*p, preds[0]);
        }
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let s = stream(500);
        let run = |seed| {
            let rounds = s.iter().map(|(p, y)| (p.as_slice(), *y));
            run_active_rounds(rounds, 3, QueryPolicy::rewaf(0.3, seed).unwrap(), 0.2, 0.2).unwrap()
        };
        let (a, b, c) = (run(4), run(4), run(5));
        assert_eq!(a.queried, b.queried);
        assert_eq!(a.predictions, b.predictions);
        assert_ne!(a.queried, c.queried);
    }

    #[test]
    fn policy_validation() {
        assert!(QueryPolicy::rewaf(1.5, 0).is_err());
        assert!(QueryPolicy::rgf(-0.1, 0).is_err());
        assert!(QueryPolicy::random(PolicyKind::Aewaf, 0.5, 0).is_err());
        assert!(QueryPolicy::aewaf().rho().is_none());
        assert_eq!(QueryPolicy::rgf(0.5, 3).unwrap().rho(), Some(0.5));
        assert!(ActiveState::new(0.0, 0.2, 2).is_err());
        assert!(ActiveState::new(1.0, f64::NAN, 2).is_err());
        for k in [
            PolicyKind::Aewaf,
            PolicyKind::Agf,
            PolicyKind::Rewaf,
            PolicyKind::Rgf,
        ] {
            assert_eq!(k.to_string().parse::<PolicyKind>().unwrap(), k);
            assert_eq!(k.counterpart().counterpart(), k);
        }
    }
}
