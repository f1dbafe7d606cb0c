//! Experiment configuration: defaults, `key = value` files, and overrides.

use std::path::{Path, PathBuf};

use crate::analysis::Algorithm;
use crate::error::{Error, Result};
use crate::experts::TrainParams;

pub const DEFAULT_DELTA: f64 = 0.2;
pub const DEFAULT_PERMUTATIONS: usize = 20;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.2;
pub const DEFAULT_DELTA_GRID: [f64; 8] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.40, 0.50];

/// Every setting a command needs. Unset optional fields fall back to
/// per-command defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    /// Model file; defaults to `<out_dir>/model.txt`.
    pub model: Option<PathBuf>,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub perm_seed: u64,
    pub permutations: usize,
    pub policies: Option<Vec<Algorithm>>,
    pub delta: f64,
    pub deltas: Vec<f64>,
    /// `None` uses `√(8 ln N / T)`.
    pub eta: Option<f64>,
    pub train: TrainParams,
    pub out_dir: PathBuf,
    /// Also write one per-round CSV per run.
    pub traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            model: None,
            split_seed: 0,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            perm_seed: 1,
            permutations: DEFAULT_PERMUTATIONS,
            policies: None,
            delta: DEFAULT_DELTA,
            deltas: DEFAULT_DELTA_GRID.to_vec(),
            eta: None,
            train: TrainParams::default(),
            out_dir: PathBuf::from("results"),
            traces: false,
        }
    }
}

fn invalid(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{key} = {value:?}: {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| invalid(key, value, e))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Known keys: `dataset`, `model`, `split_seed`, `train_fraction`,
    /// `perm_seed`, `permutations`, `policies`, `delta`, `deltas`, `eta`,
    /// `pa_c`, `alma_alpha`, `arow_r`, `out_dir`, `traces`. Lists are
    /// comma-separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "model" => self.model = Some(PathBuf::from(value)),
            "split_seed" => self.split_seed = parse_num(key, value)?,
            "train_fraction" => self.train_fraction = parse_num(key, value)?,
            "perm_seed" => self.perm_seed = parse_num(key, value)?,
            "permutations" | "perms" => self.permutations = parse_num(key, value)?,
            "policies" => self.policies = Some(parse_list(key, value)?),
            "delta" => self.delta = parse_num(key, value)?,
            "deltas" => self.deltas = parse_list(key, value)?,
            "eta" => {
                self.eta = match value {
                    "" | "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "pa_c" => self.train.pa_c = parse_num(key, value)?,
            "alma_alpha" => self.train.alma_alpha = parse_num(key, value)?,
            "arow_r" => self.train.arow_r = parse_num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "traces" => self.traces = parse_num(key, value)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown config key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key = value` file on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_str(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
            self.set(key, value).map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.permutations == 0 {
            return Err(Error::InvalidParameter("permutations must be >= 1".into()));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if self.deltas.is_empty() {
            return Err(Error::InvalidParameter("delta grid is empty".into()));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "grid delta must be >= 0, got {d}"
            )));
        }
        if self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "delta grid must be strictly increasing".into(),
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "eta must be positive, got {eta}"
                )));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if matches!(&self.policies, Some(p) if p.is_empty()) {
            return Err(Error::InvalidParameter("policy list is empty".into()));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::InvalidParameter("no dataset given".into()))
    }

    pub fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.out_dir.join("model.txt"))
    }

    /// Permutation seeds `perm_seed + k`.
    pub fn permutation_seeds(&self) -> Vec<u64> {
        (0..self.permutations as u64)
            .map(|k| self.perm_seed.wrapping_add(k))
            .collect()
    }
}
