//! Single-pass linear learners used to build the expert pool.
//!
//! Every learner consumes signed labels `ŷ ∈ {-1, +1}` and keeps a dense
//! weight vector. A round counts as a mistake when `ŷ (w · x) <= 0` before
//! the update, whatever the learner's own update trigger is.

use crate::primitives::{sparse_dot, SparseVector};

/// Hyperparameters for the five learners.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    /// Aggressiveness cap `C` of PA-I.
    pub pa_c: f64,
    /// Margin parameter `α` of ALMA (p is fixed at 2).
    pub alma_alpha: f64,
    /// ALMA learning-rate constant; Gentile's default is `√2`.
    pub alma_c: f64,
    /// AROW regularizer `r`.
    pub arow_r: f64,
    /// AROW keeps a full covariance up to this dimension, diagonal above.
    pub arow_full_max_dim: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            pa_c: 5.0,
            alma_alpha: 0.9,
            alma_c: std::f64::consts::SQRT_2,
            arow_r: 1.0,
            arow_full_max_dim: 512,
        }
    }
}

pub(crate) trait OnlineLearner {
    /// Processes one example; `x` has already been range-checked.
    fn observe(&mut self, x: &SparseVector, y: f64);
    fn weights(&self) -> &[f64];
    fn into_weights(self: Box<Self>) -> Vec<f64>;
}

fn axpy(w: &mut [f64], a: f64, x: &SparseVector) {
    for (i, v) in x.iter() {
        w[i] += a * v;
    }
}

fn dot(x: &SparseVector, w: &[f64]) -> f64 {
    // Dimensions are validated once per stream by the caller.
    sparse_dot(x, w).unwrap_or(0.0)
}

pub(crate) struct Perceptron {
    w: Vec<f64>,
}

impl Perceptron {
    pub fn new(w: Vec<f64>) -> Self {
        Perceptron { w }
    }
}

impl OnlineLearner for Perceptron {
    fn observe(&mut self, x: &SparseVector, y: f64) {
        if y * dot(x, &self.w) <= 0.0 {
            axpy(&mut self.w, y, x);
        }
    }
    fn weights(&self) -> &[f64] {
        &self.w
    }
    fn into_weights(self: Box<Self>) -> Vec<f64> {
        self.w
    }
}

/// PA-I.
pub(crate) struct PassiveAggressive {
    w: Vec<f64>,
    c: f64,
}

impl PassiveAggressive {
    pub fn new(w: Vec<f64>, c: f64) -> Self {
        PassiveAggressive { w, c }
    }
}

impl OnlineLearner for PassiveAggressive {
    fn observe(&mut self, x: &SparseVector, y: f64) {
        let hinge = (1.0 - y * dot(x, &self.w)).max(0.0);
        let norm_sq = x.norm_sq();
        if hinge > 0.0 && norm_sq > 0.0 {
            let tau = self.c.min(hinge / norm_sq);
            axpy(&mut self.w, tau * y, x);
        }
    }
    fn weights(&self) -> &[f64] {
        &self.w
    }
    fn into_weights(self: Box<Self>) -> Vec<f64> {
        self.w
    }
}

/// ALMA_2(α) on unit-normalized instances, with the weight vector kept in
/// the unit ball. `k` counts corrections plus one.
pub(crate) struct Alma {
    w: Vec<f64>,
    alpha: f64,
    b: f64,
    c: f64,
    k: f64,
}

impl Alma {
    pub fn new(w: Vec<f64>, alpha: f64, c: f64) -> Self {
        Alma {
            w,
            alpha,
            b: 1.0 / alpha,
            c,
            k: 1.0,
        }
    }
}

impl OnlineLearner for Alma {
    fn observe(&mut self, x: &SparseVector, y: f64) {
        let norm = x.norm_sq().sqrt();
        if norm == 0.0 {
            return;
        }
        let margin = y * dot(x, &self.w) / norm;
        let gamma = self.b / self.k.sqrt();
        if margin <= (1.0 - self.alpha) * gamma {
            let eta = self.c / self.k.sqrt();
            axpy(&mut self.w, eta * y / norm, x);
            let w_norm = self.w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if w_norm > 1.0 {
                self.w.iter_mut().for_each(|v| *v /= w_norm);
            }
            self.k += 1.0;
        }
    }
    fn weights(&self) -> &[f64] {
        &self.w
    }
    fn into_weights(self: Box<Self>) -> Vec<f64> {
        self.w
    }
}

/// Mistake-driven ROMMA: on `ŷ (w · x) <= 0`, jump to the minimum-norm point
/// of `{v : v·w >= |w|², ŷ v·x >= 1}`.
pub(crate) struct Romma {
    w: Vec<f64>,
}

impl Romma {
    pub fn new(w: Vec<f64>) -> Self {
        Romma { w }
    }
}

impl OnlineLearner for Romma {
    fn observe(&mut self, x: &SparseVector, y: f64) {
        let f = dot(x, &self.w);
        if y * f > 0.0 {
            return;
        }
        let x_sq = x.norm_sq();
        if x_sq == 0.0 {
            return;
        }
        let w_sq: f64 = self.w.iter().map(|v| v * v).sum();
        if w_sq == 0.0 {
            self.w.iter_mut().for_each(|v| *v = 0.0);
            axpy(&mut self.w, y / x_sq, x);
            return;
        }
        let denom = x_sq * w_sq - f * f;
        // x parallel to w with the wrong sign: the two constraints are
        // disjoint, leave w alone.
        if denom <= 1e-12 * x_sq * w_sq {
            return;
        }
        let c = (x_sq * w_sq - y * f) / denom;
        let d = w_sq * (y - f) / denom;
        self.w.iter_mut().for_each(|v| *v *= c);
        axpy(&mut self.w, d, x);
    }
    fn weights(&self) -> &[f64] {
        &self.w
    }
    fn into_weights(self: Box<Self>) -> Vec<f64> {
        self.w
    }
}

enum Covariance {
    /// Row-major `d × d`.
    Full(Vec<f64>),
    Diagonal(Vec<f64>),
}

/// AROW with regularizer `r`; `Σ` starts at the identity.
pub(crate) struct Arow {
    mu: Vec<f64>,
    sigma: Covariance,
    r: f64,
    // Scratch for Σx, dense over all dimensions.
    sx: Vec<f64>,
}

impl Arow {
    pub fn new(mu: Vec<f64>, r: f64, full_max_dim: usize) -> Self {
        let d = mu.len();
        let sigma = if d <= full_max_dim {
            let mut s = vec![0.0; d * d];
            for i in 0..d {
                s[i * d + i] = 1.0;
            }
            Covariance::Full(s)
        } else {
            Covariance::Diagonal(vec![1.0; d])
        };
        Arow {
            mu,
            sigma,
            r,
            sx: vec![0.0; d],
        }
    }
}

impl OnlineLearner for Arow {
    fn observe(&mut self, x: &SparseVector, y: f64) {
        let m = y * dot(x, &self.mu);
        let loss = (1.0 - m).max(0.0);
        if loss <= 0.0 {
            return;
        }
        let d = self.mu.len();
        match &mut self.sigma {
            Covariance::Full(s) => {
                for (i, sxi) in self.sx.iter_mut().enumerate() {
                    let row = &s[i * d..(i + 1) * d];
                    *sxi = x.iter().map(|(j, v)| row[j] * v).sum();
                }
                let v: f64 = x.iter().map(|(j, xj)| xj * self.sx[j]).sum();
                let beta = 1.0 / (v + self.r);
                let alpha = loss * beta;
                for (mu, sxi) in self.mu.iter_mut().zip(&self.sx) {
                    *mu += alpha * y * sxi;
                }
                for i in 0..d {
                    let a = beta * self.sx[i];
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut s[i * d..(i + 1) * d];
                    for (sij, sxj) in row.iter_mut().zip(&self.sx) {
                        *sij -= a * sxj;
                    }
                }
            }
            Covariance::Diagonal(s) => {
                let v: f64 = x.iter().map(|(j, xj)| s[j] * xj * xj).sum();
                let beta = 1.0 / (v + self.r);
                let alpha = loss * beta;
                for (j, xj) in x.iter() {
                    let sxj = s[j] * xj;
                    self.mu[j] += alpha * y * sxj;
                    s[j] -= beta * sxj * sxj;
                }
            }
        }
    }
    fn weights(&self) -> &[f64] {
        &self.mu
    }
    fn into_weights(self: Box<Self>) -> Vec<f64> {
        self.mu
    }
}
