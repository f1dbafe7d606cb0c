//! The expert pool: linear classifiers trained in one pass over the
//! training split, then frozen and exposed as `f(x) = π(u · x + 0.5)`.

mod learners;
mod model_file;

use std::fmt;
use std::str::FromStr;

pub use learners::TrainParams;
pub use model_file::{read_model, write_model};

use learners::{Alma, Arow, OnlineLearner, PassiveAggressive, Perceptron, Romma};

use crate::error::{Error, Result};
use crate::primitives::{clip_unit, sparse_dot, Example, SparseVector, UnitPrediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExpertKind {
    Perceptron,
    Romma,
    Alma,
    PassiveAggressive,
    Arow,
}

impl ExpertKind {
    /// The five-expert roster, in pool order.
    pub const ALL: [ExpertKind; 5] = [
        ExpertKind::Perceptron,
        ExpertKind::Romma,
        ExpertKind::Alma,
        ExpertKind::PassiveAggressive,
        ExpertKind::Arow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExpertKind::Perceptron => "perceptron",
            ExpertKind::Romma => "romma",
            ExpertKind::Alma => "alma",
            ExpertKind::PassiveAggressive => "pa",
            ExpertKind::Arow => "arow",
        }
    }
}

impl fmt::Display for ExpertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpertKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExpertKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown expert kind {s:?}")))
    }
}

/// A frozen linear expert.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearExpert {
    kind: ExpertKind,
    weights: Vec<f64>,
}

impl LinearExpert {
    pub fn new(kind: ExpertKind, weights: Vec<f64>) -> Result<Self> {
        if let Some(&w) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::NonFinite(w));
        }
        Ok(LinearExpert { kind, weights })
    }

    pub fn kind(&self) -> ExpertKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `π(u · x + 0.5)`.
    pub fn predict(&self, x: &SparseVector) -> Result<UnitPrediction> {
        clip_unit(sparse_dot(x, &self.weights)? + 0.5)
    }
}

/// Outcome of training one expert.
#[derive(Clone, Debug)]
pub struct TrainedExpert {
    pub expert: LinearExpert,
    /// Rounds with `ŷ (w · x) <= 0` before the update.
    pub mistakes: usize,
}

/// One sequential pass of `kind` over `stream`, starting from zero weights.
pub fn train_expert(
    kind: ExpertKind,
    stream: &[Example],
    dim: usize,
    params: &TrainParams,
) -> Result<TrainedExpert> {
    train_expert_from(kind, stream, vec![0.0; dim], params)
}

/// As [`train_expert`], starting from `initial` weights.
pub fn train_expert_from(
    kind: ExpertKind,
    stream: &[Example],
    initial: Vec<f64>,
    params: &TrainParams,
) -> Result<TrainedExpert> {
    if stream.is_empty() {
        return Err(Error::InvalidParameter("empty training stream".into()));
    }
    let dim = initial.len();
    if let Some(ex) = stream.iter().find(|ex| ex.x.min_dim() > dim) {
        return Err(Error::DimensionMismatch {
            index: ex.x.min_dim() - 1,
            len: dim,
        });
    }
    let mut learner: Box<dyn OnlineLearner> = match kind {
        ExpertKind::Perceptron => Box::new(Perceptron::new(initial)),
        ExpertKind::Romma => Box::new(Romma::new(initial)),
        ExpertKind::Alma => Box::new(Alma::new(initial, params.alma_alpha, params.alma_c)),
        ExpertKind::PassiveAggressive => Box::new(PassiveAggressive::new(initial, params.pa_c)),
        ExpertKind::Arow => Box::new(Arow::new(initial, params.arow_r, params.arow_full_max_dim)),
    };
    let mut mistakes = 0;
    for ex in stream {
        let y = ex.y.signed();
        if y * sparse_dot(&ex.x, learner.weights())? <= 0.0 {
            mistakes += 1;
        }
        learner.observe(&ex.x, y);
    }
    Ok(TrainedExpert {
        expert: LinearExpert::new(kind, learner.into_weights())?,
        mistakes,
    })
}

/// An ordered, frozen set of experts sharing one dimensionality.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertPool {
    experts: Vec<LinearExpert>,
}

impl ExpertPool {
    pub fn new(experts: Vec<LinearExpert>) -> Result<Self> {
        let Some(first) = experts.first() else {
            return Err(Error::InvalidParameter("expert pool is empty".into()));
        };
        let dim = first.dim();
        if let Some(e) = experts.iter().find(|e| e.dim() != dim) {
            return Err(Error::InvalidParameter(format!(
                "expert dimensions differ: {} vs {}",
                dim,
                e.dim()
            )));
        }
        Ok(ExpertPool { experts })
    }

    /// Trains every kind in [`ExpertKind::ALL`] on `stream`. Returns the pool
    /// and the per-expert mistake counts.
    pub fn train(
        stream: &[Example],
        dim: usize,
        params: &TrainParams,
    ) -> Result<(ExpertPool, Vec<usize>)> {
        let mut experts = Vec::with_capacity(ExpertKind::ALL.len());
        let mut mistakes = Vec::with_capacity(ExpertKind::ALL.len());
        for kind in ExpertKind::ALL {
            let trained = train_expert(kind, stream, dim, params)?;
            experts.push(trained.expert);
            mistakes.push(trained.mistakes);
        }
        Ok((ExpertPool::new(experts)?, mistakes))
    }

    pub fn experts(&self) -> &[LinearExpert] {
        &self.experts
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.experts[0].dim()
    }

    /// `(f₁(x), …, f_N(x))`.
    pub fn evaluate(&self, x: &SparseVector) -> Result<Vec<UnitPrediction>> {
        self.experts.iter().map(|e| e.predict(x)).collect()
    }

    /// Like [`evaluate`](Self::evaluate), reusing `out`.
    pub fn evaluate_into(&self, x: &SparseVector, out: &mut Vec<UnitPrediction>) -> Result<()> {
        out.clear();
        for e in &self.experts {
            out.push(e.predict(x)?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::BinaryLabel;

    fn ex(dense: &[f64], y: u8) -> Example {
        Example::new(
            SparseVector::from_dense(dense).unwrap(),
            BinaryLabel::from_bool(y == 1),
        )
    }

    fn expert_with_score(score: f64) -> (LinearExpert, SparseVector) {
        let e = LinearExpert::new(ExpertKind::Perceptron, vec![score, 7.0]).unwrap();
        (e, SparseVector::from_sorted(vec![(0, 1.0)]).unwrap())
    }

    #[test]
    fn expert_predict_examples() {
        let (e, x) = expert_with_score(0.0);
        assert_eq!(e.predict(&x).unwrap().value(), 0.5);
        let (e, x) = expert_with_score(0.3);
        assert!((e.predict(&x).unwrap().value() - 0.8).abs() < 1e-15);
        let (e, x) = expert_with_score(2.0);
        assert_eq!(e.predict(&x).unwrap().value(), 1.0);
        let (e, x) = expert_with_score(-4.0);
        assert_eq!(e.predict(&x).unwrap().value(), 0.0);
    }

    #[test]
    fn expert_predict_dimension_mismatch() {
        let e = LinearExpert::new(ExpertKind::Arow, vec![1.0]).unwrap();
        let x = SparseVector::from_sorted(vec![(4, 1.0)]).unwrap();
        assert!(matches!(
            e.predict(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn perceptron_single_mistake() {
        let t = train_expert(
            ExpertKind::Perceptron,
            &[ex(&[1.0, 0.0], 1)],
            2,
            &TrainParams::default(),
        )
        .unwrap();
        assert_eq!(t.expert.weights(), &[1.0, 0.0]);
        assert_eq!(t.mistakes, 1);
    }

    #[test]
    fn pa_single_update() {
        // τ = min(5, 1 / 1) = 1.
        let t = train_expert(
            ExpertKind::PassiveAggressive,
            &[ex(&[1.0, 0.0], 1)],
            2,
            &TrainParams::default(),
        )
        .unwrap();
        assert_eq!(t.expert.weights(), &[1.0, 0.0]);
        // Small instance: τ is capped by C.
        let t = train_expert(
            ExpertKind::PassiveAggressive,
            &[ex(&[0.1, 0.0], 0)],
            2,
            &TrainParams::default(),
        )
        .unwrap();
        assert!((t.expert.weights()[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn no_violation_leaves_initial_weights() {
        let u0 = vec![10.0, -10.0];
        let stream = [ex(&[1.0, 0.0], 1), ex(&[0.0, 1.0], 0), ex(&[2.0, 1.0], 1)];
        for kind in ExpertKind::ALL {
            let init = if kind == ExpertKind::Alma {
                // ALMA lives in the unit ball and needs margin above (1-α)B.
                vec![0.7, -0.7]
            } else {
                u0.clone()
            };
            let t =
                train_expert_from(kind, &stream, init.clone(), &TrainParams::default()).unwrap();
            assert_eq!(t.expert.weights(), init.as_slice(), "{kind}");
            assert_eq!(t.mistakes, 0);
        }
    }

    #[test]
    fn zero_norm_instances_are_skipped() {
        let stream = [ex(&[0.0, 0.0], 1), ex(&[0.0, 0.0], 0)];
        for kind in ExpertKind::ALL {
            let t = train_expert(kind, &stream, 2, &TrainParams::default()).unwrap();
            assert_eq!(t.expert.weights(), &[0.0, 0.0], "{kind}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let stream: Vec<Example> = (0..200)
            .map(|i| {
                let a = ((i * 37) % 11) as f64 - 5.0;
                let b = ((i * 17) % 7) as f64 - 3.0;
                ex(&[a, b, 1.0], u8::from(a + 0.5 * b > 0.0))
            })
            .collect();
        for kind in ExpertKind::ALL {
            let a = train_expert(kind, &stream, 3, &TrainParams::default()).unwrap();
            let b = train_expert(kind, &stream, 3, &TrainParams::default()).unwrap();
            assert_eq!(a.expert, b.expert);
            assert!(a.expert.weights().iter().all(|w| w.is_finite()));
        }
    }

    #[test]
    fn empty_stream_rejected() {
        assert!(train_expert(ExpertKind::Romma, &[], 3, &TrainParams::default()).is_err());
    }

    #[test]
    fn pool_evaluate_examples() {
        let x = SparseVector::from_sorted(vec![(1, 3.0)]).unwrap();
        let pool = ExpertPool::new(vec![
            LinearExpert::new(ExpertKind::Arow, vec![0.0; 2]).unwrap()
        ])
        .unwrap();
        assert_eq!(pool.evaluate(&x).unwrap(), vec![UnitPrediction::HALF]);

        let e = LinearExpert::new(ExpertKind::Romma, vec![0.1, 0.05]).unwrap();
        let pool = ExpertPool::new(vec![e.clone(), e]).unwrap();
        let p = pool.evaluate(&x).unwrap();
        assert_eq!(p[0], p[1]);
        assert!((p[0].value() - 0.65).abs() < 1e-15);
    }

    #[test]
    fn pool_rejects_mixed_dimensions() {
        let a = LinearExpert::new(ExpertKind::Arow, vec![0.0; 2]).unwrap();
        let b = LinearExpert::new(ExpertKind::Arow, vec![0.0; 3]).unwrap();
        assert!(ExpertPool::new(vec![a, b]).is_err());
        assert!(ExpertPool::new(vec![]).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ExpertKind::ALL {
            assert_eq!(k.name().parse::<ExpertKind>().unwrap(), k);
        }
        assert!("svm".parse::<ExpertKind>().is_err());
    }
}
