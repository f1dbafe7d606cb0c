//! Value types shared by every layer: sparse instances, binary outcomes,
//! unit-interval predictions, and the two scalar primitives of the game,
//! the `[0, 1]` projection and the absolute loss.

use std::fmt;

use crate::error::{Error, Result};

/// Binary outcome of a round, stored as `0` or `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    Zero,
    One,
}

impl BinaryLabel {
    pub fn from_bool(one: bool) -> Self {
        if one {
            BinaryLabel::One
        } else {
            BinaryLabel::Zero
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            BinaryLabel::Zero => 0.0,
            BinaryLabel::One => 1.0,
        }
    }

    /// Margin-based learners work on `{-1, +1}`.
    pub fn signed(self) -> f64 {
        match self {
            BinaryLabel::Zero => -1.0,
            BinaryLabel::One => 1.0,
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64() as u8)
    }
}

/// A prediction in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct UnitPrediction(f64);

impl UnitPrediction {
    pub const HALF: UnitPrediction = UnitPrediction(0.5);

    /// Wraps a value already known to be in `[0, 1]`.
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(UnitPrediction(value))
        } else if value.is_finite() {
            Err(Error::InvalidParameter(format!(
                "prediction {value} outside [0, 1]"
            )))
        } else {
            Err(Error::NonFinite(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<UnitPrediction> for f64 {
    fn from(p: UnitPrediction) -> f64 {
        p.0
    }
}

/// Projection onto `[0, 1]`: `max(0, min(1, v))`.
pub fn clip_unit(v: f64) -> Result<UnitPrediction> {
    if !v.is_finite() {
        return Err(Error::NonFinite(v));
    }
    Ok(UnitPrediction(v.clamp(0.0, 1.0)))
}

/// Absolute loss `|p - y|`.
#[inline]
pub fn abs_loss(p: UnitPrediction, y: BinaryLabel) -> f64 {
    match y {
        BinaryLabel::One => 1.0 - p.0,
        BinaryLabel::Zero => p.0,
    }
}

/// Sparse instance: `(index, value)` pairs with strictly increasing
/// 0-based indices and no stored zeros.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn empty() -> Self {
        SparseVector::default()
    }

    /// Builds a vector from pairs that must already be sorted by index.
    /// Zero values are dropped.
    pub fn from_sorted(pairs: Vec<(usize, f64)>) -> Result<Self> {
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter(format!(
                    "sparse indices not strictly increasing: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(_, v)) = pairs.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(v));
        }
        let entries = pairs.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Ok(SparseVector { entries })
    }

    /// Builds a sparse vector from a dense slice, skipping zeros.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        SparseVector::from_sorted(values.iter().copied().enumerate().collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest stored index, `0` for the empty vector.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i + 1)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }
}

/// One labelled round: an instance and its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub x: SparseVector,
    pub y: BinaryLabel,
}

impl Example {
    pub fn new(x: SparseVector, y: BinaryLabel) -> Self {
        Example { x, y }
    }
}

/// `x · u` for sparse `x` and dense `u`.
pub fn sparse_dot(x: &SparseVector, u: &[f64]) -> Result<f64> {
    if let Some(&(index, _)) = x.entries.last() {
        if index >= u.len() {
            return Err(Error::DimensionMismatch {
                index,
                len: u.len(),
            });
        }
    }
    Ok(x.entries.iter().map(|&(i, v)| v * u[i]).sum())
}
