//! Sparse-text datasets (`<label> <idx>:<val> ...`, 1-based indices, the
//! LIBSVM distribution format), label normalization, and the seeded
//! train/test split and test-set permutations.
//!
//! All shuffles are Fisher–Yates (swap position `i` with a uniform pick
//! from `i..n`) driven by ChaCha20 seeded through `seed_from_u64`, with
//! bounded draws by rejection sampling on `next_u64`. Splits use ChaCha
//! stream [`SPLIT_STREAM`], permutations [`PERMUTATION_STREAM`].

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::primitives::{BinaryLabel, Example, SparseVector};

pub const PERMUTATION_STREAM: u64 = 0;
pub const SPLIT_STREAM: u64 = 2;

/// Raw label values mapped to `0` and `1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelMap {
    pub zero: f64,
    pub one: f64,
}

impl LabelMap {
    pub fn raw(&self, y: BinaryLabel) -> f64 {
        match y {
            BinaryLabel::Zero => self.zero,
            BinaryLabel::One => self.one,
        }
    }
}

/// A parsed file before label normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RawDataset {
    pub name: String,
    pub labels: Vec<f64>,
    pub features: Vec<SparseVector>,
    /// Largest 1-based index seen.
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub instances: Vec<Example>,
    pub dim: usize,
    pub label_map: LabelMap,
}

impl Dataset {
    pub fn from_raw(raw: RawDataset) -> Result<Self> {
        let (label_map, labels) = label_normalize(&raw.labels)?;
        let instances = raw
            .features
            .into_iter()
            .zip(labels)
            .map(|(x, y)| Example::new(x, y))
            .collect();
        Ok(Dataset {
            name: raw.name,
            instances,
            dim: raw.dim,
            label_map,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// A dataset with the same metadata holding `instances[order[k]]`.
    pub fn reordered(&self, order: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            instances: order.iter().map(|&i| self.instances[i].clone()).collect(),
            dim: self.dim,
            label_map: self.label_map,
        }
    }
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses sparse text. `path` only labels error messages.
pub fn parse_sparse_text<R: BufRead>(reader: R, name: &str, path: &Path) -> Result<RawDataset> {
    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut dim = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok
            .parse()
            .ok()
            .filter(|l: &f64| l.is_finite())
            .ok_or_else(|| parse_error(path, lineno, format!("bad label {label_tok:?}")))?;
        let mut pairs = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| {
                parse_error(path, lineno, format!("expected idx:val, got {tok:?}"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(path, lineno, format!("bad index in {tok:?}")))?;
            if idx < 1 {
                return Err(parse_error(path, lineno, format!("index {idx} < 1")));
            }
            if idx <= last {
                return Err(parse_error(
                    path,
                    lineno,
                    format!("indices not increasing: {idx} after {last}"),
                ));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_error(path, lineno, format!("bad value in {tok:?}")))?;
            last = idx;
            pairs.push((idx - 1, val));
        }
        dim = dim.max(last);
        labels.push(label);
        features.push(SparseVector::from_sorted(pairs)?);
    }
    Ok(RawDataset {
        name: name.to_string(),
        labels,
        features,
        dim,
    })
}

/// Maps the smaller of exactly two raw label values to `0`, the larger to `1`.
pub fn label_normalize(raw: &[f64]) -> Result<(LabelMap, Vec<BinaryLabel>)> {
    let mut distinct: Vec<f64> = Vec::new();
    for &l in raw {
        if !distinct.contains(&l) {
            distinct.push(l);
            if distinct.len() > 2 {
                break;
            }
        }
    }
    distinct.sort_by(f64::total_cmp);
    if distinct.len() != 2 {
        return Err(Error::NotBinary(distinct));
    }
    let map = LabelMap {
        zero: distinct[0],
        one: distinct[1],
    };
    let labels = raw
        .iter()
        .map(|&l| BinaryLabel::from_bool(l == map.one))
        .collect();
    Ok((map, labels))
}

/// Loads a dataset file, transparently gunzipping it when it starts with
/// the gzip magic bytes.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_raw(load_raw(path)?)
}

/// As [`load_dataset`], without label normalization.
pub fn load_raw(path: &Path) -> Result<RawDataset> {
    let mut file = BufReader::new(File::open(path)?);
    let gz = file.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let reader: Box<dyn BufRead> = if gz {
        Box::new(BufReader::new(GzDecoder::new(file)))
    } else {
        Box::new(file)
    };
    parse_sparse_text(reader, &dataset_name(path), path)
}

/// Loads and splits, checking that both sides are non-empty before the
/// labels are examined.
pub fn load_split(path: &Path, spec: SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let raw = load_raw(path)?;
    split_indices(raw.labels.len(), spec)?;
    let ds = Dataset::from_raw(raw)?;
    let (train, test) = split(&ds, spec)?;
    Ok((ds, train, test))
}

/// File stem with any `.gz` stripped first.
pub fn dataset_name(path: &Path) -> String {
    let p: PathBuf = if path.extension().is_some_and(|e| e == "gz") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    p.file_stem()
        .or_else(|| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Writes the dataset back in sparse text with the original raw labels.
pub fn write_sparse_text<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    for ex in &ds.instances {
        write!(out, "{}", ds.label_map.raw(ex.y))?;
        for (i, v) in ex.x.iter() {
            write!(out, " {}:{}", i + 1, v)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads all of `reader` as sparse text; a convenience for in-memory data.
pub fn parse_dataset_str(text: &str, name: &str) -> Result<Dataset> {
    Dataset::from_raw(parse_sparse_text(text.as_bytes(), name, Path::new(name))?)
}

fn rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform integer in `0..bound` by rejection, `bound >= 1`.
fn uniform_below(rng: &mut ChaCha20Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

fn shuffle_with(rng: &mut ChaCha20Rng, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n.saturating_sub(1) {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        order.swap(i, j);
    }
    order
}

/// A uniformly random permutation of `0..n` determined by `seed` and `stream`.
pub fn shuffled_indices(n: usize, seed: u64, stream: u64) -> Vec<usize> {
    shuffle_with(&mut rng(seed, stream), n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
        })
    }
}

/// Seeded shuffle, then the first `floor(fraction · n)` instances train.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = split_indices(ds.len(), spec)?;
    Ok((ds.reordered(&train_idx), ds.reordered(&test_idx)))
}

/// Instance indices of the train and test sides of [`split`].
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let SplitSpec {
        train_fraction,
        seed,
    } = SplitSpec::new(spec.train_fraction, spec.seed)?;
    let cut = (train_fraction * n as f64).floor() as usize;
    if cut == 0 || cut >= n {
        return Err(Error::EmptySplit {
            total: n,
            fraction: train_fraction,
        });
    }
    let mut order = shuffled_indices(n, seed, SPLIT_STREAM);
    let test = order.split_off(cut);
    Ok((order, test))
}

/// Run `k` uses seed `base_seed + k`.
pub fn permutation_orders(n: usize, count: usize, base_seed: u64) -> Vec<Vec<usize>> {
    (0..count as u64)
        .map(|k| shuffled_indices(n, base_seed.wrapping_add(k), PERMUTATION_STREAM))
        .collect()
}

pub fn permutations(test: &Dataset, count: usize, base_seed: u64) -> Result<Vec<Dataset>> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "permutation count must be >= 1".into(),
        ));
    }
    Ok(permutation_orders(test.len(), count, base_seed)
        .iter()
        .map(|o| test.reordered(o))
        .collect())
}

/// Reads a whole file into memory, gunzipping when needed.
pub fn read_maybe_gz(path: &Path) -> Result<String> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut s = String::new();
        GzDecoder::new(bytes.as_slice()).read_to_string(&mut s)?;
        Ok(s)
    } else {
        String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}
