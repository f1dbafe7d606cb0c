//! Full-information forecasters: the weighted average family, the
//! exponentially weighted average forecaster (EWAF) and the greedy
//! forecaster (GF).
//!
//! Exponential weights are always evaluated with the smallest cumulative
//! loss subtracted first, so `exp(-η L)` never underflows to an all-zero
//! weight vector however long the stream gets.

use crate::error::{Error, Result};
use crate::primitives::{abs_loss, clip_unit, BinaryLabel, UnitPrediction};

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "learning rate must be finite and positive, got {eta}"
        )))
    }
}

/// `Σ wᵢ fᵢ / Σ wᵢ` for non-negative weights.
pub fn weighted_average(weights: &[f64], preds: &[UnitPrediction]) -> Result<UnitPrediction> {
    check_len(weights.len(), preds.len())?;
    if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let num: f64 = weights.iter().zip(preds).map(|(w, p)| w * p.value()).sum();
    clip_unit(clamp_to_hull(num / total, preds))
}

/// A convex combination lies in `[min f, max f]`; rounding can push it
/// just outside, so pull it back.
fn clamp_to_hull(v: f64, preds: &[UnitPrediction]) -> f64 {
    let (lo, hi) = preds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.value()), hi.max(p.value()))
        });
    v.clamp(lo, hi)
}

/// Exponentially weighted average under `losses`, with the minimum loss
/// factored out.
pub(crate) fn ewa_value(eta: f64, losses: &[f64], preds: &[UnitPrediction]) -> f64 {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut num = 0.0;
    let mut den = 0.0;
    for (l, p) in losses.iter().zip(preds) {
        let w = (-eta * (l - min)).exp();
        num += w * p.value();
        den += w;
    }
    clamp_to_hull(num / den, preds)
}

fn log_sum_exp(exponents: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = exponents.clone().fold(f64::NEG_INFINITY, f64::max);
    max + exponents.map(|a| (a - max).exp()).sum::<f64>().ln()
}

/// Pre-clip greedy value `1/2 + (1/2η) ln(Σ e^{-η(Lᵢ + 1 - fᵢ)} / Σ e^{-η(Lᵢ + fᵢ)})`.
/// It is increasing in every `fᵢ`, so it also lies in `[min f, max f]`.
pub(crate) fn greedy_value(eta: f64, losses: &[f64], preds: &[UnitPrediction]) -> f64 {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted = losses.iter().map(move |l| l - min);
    let num = shifted
        .clone()
        .zip(preds)
        .map(|(l, p)| -eta * (l + 1.0 - p.value()));
    let den = shifted.zip(preds).map(|(l, p)| -eta * (l + p.value()));
    clamp_to_hull(
        0.5 + (log_sum_exp(num) - log_sum_exp(den)) / (2.0 * eta),
        preds,
    )
}

/// The greedy forecaster's value before and after projection onto `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyPrediction {
    pub pre_clip: f64,
    pub clipped: UnitPrediction,
}

impl GreedyPrediction {
    pub(crate) fn from_pre_clip(pre_clip: f64) -> Result<Self> {
        Ok(GreedyPrediction {
            pre_clip,
            clipped: clip_unit(pre_clip)?,
        })
    }
}

/// Which full-information forecaster to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ForecasterKind {
    Ewaf,
    Gf,
}

/// Learning rate and per-expert cumulative losses `L_{i,t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecasterState {
    eta: f64,
    cum_losses: Vec<f64>,
    rounds_seen: usize,
}

impl ForecasterState {
    pub fn new(eta: f64, experts: usize) -> Result<Self> {
        ForecasterState::with_losses(eta, vec![0.0; experts])
    }

    /// Starts from given cumulative losses (each must be finite and `>= 0`).
    pub fn with_losses(eta: f64, cum_losses: Vec<f64>) -> Result<Self> {
        check_eta(eta)?;
        if cum_losses.is_empty() {
            return Err(Error::InvalidParameter("no experts".into()));
        }
        if let Some(&l) = cum_losses.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "invalid cumulative loss {l}"
            )));
        }
        Ok(ForecasterState {
            eta,
            cum_losses,
            rounds_seen: 0,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cum_losses(&self) -> &[f64] {
        &self.cum_losses
    }

    pub fn rounds_seen(&self) -> usize {
        self.rounds_seen
    }

    pub fn ewaf_predict(&self, preds: &[UnitPrediction]) -> Result<UnitPrediction> {
        check_len(self.cum_losses.len(), preds.len())?;
        clip_unit(ewa_value(self.eta, &self.cum_losses, preds))
    }

    pub fn gf_predict(&self, preds: &[UnitPrediction]) -> Result<GreedyPrediction> {
        check_len(self.cum_losses.len(), preds.len())?;
        GreedyPrediction::from_pre_clip(greedy_value(self.eta, &self.cum_losses, preds))
    }

    pub fn predict(
        &self,
        kind: ForecasterKind,
        preds: &[UnitPrediction],
    ) -> Result<UnitPrediction> {
        match kind {
            ForecasterKind::Ewaf => self.ewaf_predict(preds),
            ForecasterKind::Gf => Ok(self.gf_predict(preds)?.clipped),
        }
    }

    /// Adds `|fᵢ - y|` to every expert's cumulative loss.
    pub fn update_losses(&mut self, preds: &[UnitPrediction], y: BinaryLabel) -> Result<()> {
        check_len(self.cum_losses.len(), preds.len())?;
        for (l, p) in self.cum_losses.iter_mut().zip(preds) {
            *l += abs_loss(*p, y);
        }
        self.rounds_seen += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn up(v: &[f64]) -> Vec<UnitPrediction> {
        v.iter().map(|&x| UnitPrediction::new(x).unwrap()).collect()
    }

    fn state(eta: f64, losses: &[f64]) -> ForecasterState {
        ForecasterState::with_losses(eta, losses.to_vec()).unwrap()
    }

    #[test]
    fn weighted_average_examples() {
        assert_eq!(
            weighted_average(&[1.0, 1.0], &up(&[0.2, 0.8]))
                .unwrap()
                .value(),
            0.5
        );
        assert_eq!(
            weighted_average(&[3.0, 1.0], &up(&[1.0, 0.0]))
                .unwrap()
                .value(),
            0.75
        );
        assert_eq!(weighted_average(&[5.0], &up(&[0.4])).unwrap().value(), 0.4);
        assert!(matches!(
            weighted_average(&[0.0, 0.0], &up(&[0.1, 0.2])),
            Err(Error::DegenerateWeights)
        ));
        assert!(weighted_average(&[1.0], &up(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn ewaf_examples() {
        let p = state(1.0, &[0.0, 0.0])
            .ewaf_predict(&up(&[0.2, 0.8]))
            .unwrap();
        assert_eq!(p.value(), 0.5);
        let p = state(2f64.ln(), &[0.0, 1.0])
            .ewaf_predict(&up(&[1.0, 0.0]))
            .unwrap();
        assert!((p.value() - 2.0 / 3.0).abs() < 1e-15);
        let p = state(1.0, &[0.0, 1e6])
            .ewaf_predict(&up(&[0.9, 0.1]))
            .unwrap();
        assert!((p.value() - 0.9).abs() < 1e-9);
    }

    #[test]
    fn gf_examples() {
        for (eta, loss) in [(0.01, 0.0), (1.0, 3.5), (7.0, 1e5)] {
            let g = state(eta, &[loss]).gf_predict(&up(&[0.7])).unwrap();
            assert!(
                (g.pre_clip - 0.7).abs() < 1e-12,
                "eta {eta}: {}",
                g.pre_clip
            );
        }
        for eta in [0.05, 1.0, 10.0] {
            let g = state(eta, &[0.0, 0.0])
                .gf_predict(&up(&[1.0, 0.0]))
                .unwrap();
            assert!((g.pre_clip - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn gf_clips_large_values() {
        // A large η pushes the greedy value toward the leading expert and
        // can overshoot neither end; the clipped field always lies in [0, 1].
        let g = state(50.0, &[0.0, 3.0])
            .gf_predict(&up(&[1.0, 0.0]))
            .unwrap();
        assert!(g.pre_clip <= 1.0 + 1e-12);
        assert!((0.0..=1.0).contains(&g.clipped.value()));
    }

    #[test]
    fn update_losses_examples() {
        let mut s = state(1.0, &[0.0, 0.0]);
        s.update_losses(&up(&[0.3, 0.9]), BinaryLabel::One).unwrap();
        assert!((s.cum_losses()[0] - 0.7).abs() < 1e-15);
        assert!((s.cum_losses()[1] - 0.1).abs() < 1e-15);
        assert_eq!(s.rounds_seen(), 1);

        let mut s = state(1.0, &[1.0]);
        s.update_losses(&up(&[0.0]), BinaryLabel::Zero).unwrap();
        assert_eq!(s.cum_losses(), &[1.0]);

        let mut s = state(1.0, &[0.0]);
        for t in 0..37 {
            s.update_losses(&[UnitPrediction::HALF], BinaryLabel::from_bool(t % 3 == 0))
                .unwrap();
        }
        assert_eq!(s.cum_losses(), &[18.5]);
    }

    #[test]
    fn rejects_bad_state() {
        assert!(ForecasterState::new(0.0, 2).is_err());
        assert!(ForecasterState::new(-1.0, 2).is_err());
        assert!(ForecasterState::new(f64::NAN, 2).is_err());
        assert!(ForecasterState::new(1.0, 0).is_err());
        assert!(ForecasterState::with_losses(1.0, vec![-1.0]).is_err());
        assert!(state(1.0, &[0.0, 0.0]).ewaf_predict(&up(&[0.1])).is_err());
    }

    fn losses_and_preds(n: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        n.prop_flat_map(|n| {
            (
                prop::collection::vec(0.0f64..50.0, n),
                prop::collection::vec(0.0f64..=1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn ewaf_is_convex_combination((losses, preds) in losses_and_preds(1..8), eta in 0.01f64..5.0) {
            let preds = up(&preds);
            let p = state(eta, &losses).ewaf_predict(&preds).unwrap().value();
            let lo = preds.iter().map(|p| p.value()).fold(f64::INFINITY, f64::min);
            let hi = preds.iter().map(|p| p.value()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p >= lo - 1e-15 && p <= hi + 1e-15);
        }

        #[test]
        fn gf_identical_predictions_return_that_value(
            losses in prop::collection::vec(0.0f64..1e4, 1..8),
            c in 0.0f64..=1.0,
            eta in 0.001f64..10.0,
        ) {
            let preds = vec![UnitPrediction::new(c).unwrap(); losses.len()];
            let g = state(eta, &losses).gf_predict(&preds).unwrap();
            prop_assert!((g.pre_clip - c).abs() < 1e-12, "{} vs {}", g.pre_clip, c);
        }

        #[test]
        fn shift_invariance((losses, preds) in losses_and_preds(1..8), eta in 0.01f64..5.0, c in 0.0f64..100.0) {
            let preds = up(&preds);
            let shifted: Vec<f64> = losses.iter().map(|l| l + c).collect();
            let a = state(eta, &losses);
            let b = state(eta, &shifted);
            let (pa, pb) = (a.ewaf_predict(&preds).unwrap().value(), b.ewaf_predict(&preds).unwrap().value());
            prop_assert!((pa - pb).abs() < 1e-12);
            let (ga, gb) = (a.gf_predict(&preds).unwrap().pre_clip, b.gf_predict(&preds).unwrap().pre_clip);
            prop_assert!((ga - gb).abs() < 1e-12);
        }

        #[test]
        fn penalizing_the_top_expert_lowers_the_prediction(
            (losses, preds) in losses_and_preds(2..6),
            eta in 0.01f64..3.0,
            bump in 0.01f64..5.0,
        ) {
            let preds = up(&preds);
            let (top, top_val) = preds.iter().enumerate()
                .max_by(|a, b| a.1.value().total_cmp(&b.1.value())).map(|(i, p)| (i, p.value())).unwrap();
            prop_assume!(preds.iter().enumerate().all(|(i, p)| i == top || p.value() < top_val));
            let before = state(eta, &losses).ewaf_predict(&preds).unwrap().value();
            let mut bumped = losses.clone();
            bumped[top] += bump;
            let after = state(eta, &bumped).ewaf_predict(&preds).unwrap().value();
            prop_assert!(after <= before + 1e-15);
        }
    }
}
