//! Stream generators and direct-formula oracles shared by the integration
//! tests.

#![allow(dead_code)]

use std::path::PathBuf;

use active_forecast::primitives::{BinaryLabel, UnitPrediction};
use rand::Rng;

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn up(v: f64) -> UnitPrediction {
    UnitPrediction::new(v).unwrap()
}

/// How expert predictions are drawn each round.
#[derive(Clone, Copy, Debug)]
pub enum Shape {
    /// Independent uniform values.
    Uniform,
    /// A shared centre plus noise of half-width `spread`, clipped.
    Clustered(f64),
    /// Each prediction 0 or 1.
    Extreme,
    /// A mix of the above per round.
    Mixed,
}

pub fn draw_round<R: Rng>(rng: &mut R, n: usize, shape: Shape) -> Vec<UnitPrediction> {
    let shape = match shape {
        Shape::Mixed => match rng.random_range(0..3) {
            0 => Shape::Uniform,
            1 => Shape::Clustered(rng.random_range(0.0..0.4)),
            _ => Shape::Extreme,
        },
        s => s,
    };
    match shape {
        Shape::Clustered(s) => {
            let centre: f64 = rng.random();
            (0..n)
                .map(|_| up((centre + rng.random_range(-s..=s)).clamp(0.0, 1.0)))
                .collect()
        }
        Shape::Extreme => (0..n)
            .map(|_| up(f64::from(u8::from(rng.random::<bool>()))))
            .collect(),
        _ => (0..n).map(|_| up(rng.random())).collect(),
    }
}

pub fn random_stream<R: Rng>(
    rng: &mut R,
    n: usize,
    t: usize,
    shape: Shape,
) -> Vec<Vec<UnitPrediction>> {
    (0..t).map(|_| draw_round(rng, n, shape)).collect()
}

pub fn random_labels<R: Rng>(rng: &mut R, t: usize) -> Vec<BinaryLabel> {
    (0..t)
        .map(|_| BinaryLabel::from_bool(rng.random()))
        .collect()
}

/// The label that maximizes the loss of prediction `p`.
pub fn adversarial(p: f64) -> BinaryLabel {
    BinaryLabel::from_bool(p < 0.5)
}

/// `Σ e^{-η Lᵢ} fᵢ / Σ e^{-η Lᵢ}` evaluated literally.
pub fn naive_ewa(eta: f64, losses: &[f64], preds: &[f64]) -> f64 {
    let w: Vec<f64> = losses.iter().map(|l| (-eta * l).exp()).collect();
    w.iter().zip(preds).map(|(w, f)| w * f).sum::<f64>() / w.iter().sum::<f64>()
}

/// The greedy closed form before clipping, evaluated literally.
pub fn naive_greedy(eta: f64, losses: &[f64], preds: &[f64]) -> f64 {
    let num: f64 = losses
        .iter()
        .zip(preds)
        .map(|(l, f)| (-eta * (l + 1.0 - f)).exp())
        .sum();
    let den: f64 = losses
        .iter()
        .zip(preds)
        .map(|(l, f)| (-eta * (l + f)).exp())
        .sum();
    0.5 + (num / den).ln() / (2.0 * eta)
}
