//! Datasets, synthetic generators, the on-disk text format, fold plans and
//! mini-batch order.
//!
//! Labels are class indices in `[0, k)`. Binary tasks use `k = 2`, read as
//! `0 -> -1` and `1 -> +1`.
//!
//! File format: a header line `n=<n>,d=<d>,k=<k>`, then one line per
//! instance with `d` comma-separated features, the observed label, and the
//! true label (or `-1` when unknown).

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::Matrix;
use crate::rng::{stream, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    /// Observed (possibly noisy) labels.
    pub labels: Vec<usize>,
    /// Ground truth per instance, where known.
    pub truth: Vec<Option<usize>>,
    pub classes: usize,
    pub class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        truth: Vec<Option<usize>>,
        classes: usize,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n || truth.len() != n {
            return Err(Error::Shape(format!(
                "{n} feature rows, {} labels, {} true labels",
                labels.len(),
                truth.len()
            )));
        }
        if classes < 2 {
            return Err(Error::Domain(format!("need at least 2 classes, got {classes}")));
        }
        let bad = labels
            .iter()
            .copied()
            .chain(truth.iter().flatten().copied())
            .find(|&y| y >= classes);
        if let Some(y) = bad {
            return Err(Error::Domain(format!("label {y} out of range for {classes} classes")));
        }
        Ok(Self {
            features,
            labels,
            truth,
            classes,
            class_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Ground truth for every instance, or `None` if any is unknown.
    pub fn true_labels(&self) -> Option<Vec<usize>> {
        self.truth.iter().copied().collect()
    }

    /// Instances whose observed label differs from the truth; `None` unless
    /// the truth is fully known.
    pub fn noisy_mask(&self) -> Option<Vec<bool>> {
        let truth = self.true_labels()?;
        Some(self.labels.iter().zip(&truth).map(|(o, t)| o != t).collect())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            truth: indices.iter().map(|&i| self.truth[i]).collect(),
            classes: self.classes,
            class_names: self.class_names.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write_to(&mut out).map_err(|e| Error::io(path, e))?;
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n={},d={},k={}", self.len(), self.dim(), self.classes)?;
        for i in 0..self.len() {
            for v in self.features.row(i) {
                write!(out, "{v},")?;
            }
            match self.truth[i] {
                Some(t) => writeln!(out, "{},{t}", self.labels[i])?,
                None => writeln!(out, "{},-1", self.labels[i])?,
            }
        }
        Ok(())
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

/// Parses the text format; `origin` names the source in error messages.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;

    let (mut n, mut d, mut k) = (None, None, None);
    for field in header.split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(hline, format!("header field `{field}` is not key=value")))?;
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| err(hline, format!("header value `{value}` is not a count")))?;
        match key.trim() {
            "n" => n = Some(value),
            "d" => d = Some(value),
            "k" => k = Some(value),
            other => return Err(err(hline, format!("unknown header key `{other}`"))),
        }
    }
    let (n, d, k) = match (n, d, k) {
        (Some(n), Some(d), Some(k)) => (n, d, k),
        _ => return Err(err(hline, "header needs n, d and k".into())),
    };
    if k < 2 {
        return Err(err(hline, format!("k must be at least 2, got {k}")));
    }

    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    let mut last = hline;
    for (row, (lineno, line)) in lines.enumerate() {
        last = lineno;
        if row >= n {
            return Err(err(lineno, format!("more than the declared {n} rows")));
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != d + 2 {
            return Err(err(
                lineno,
                format!("row {row} has {} fields, expected {} ({d} features + 2 labels)", cells.len(), d + 2),
            ));
        }
        for c in &cells[..d] {
            let v: f64 = c
                .parse()
                .map_err(|_| err(lineno, format!("row {row}: `{c}` is not a number")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("row {row}: non-finite feature `{c}`")));
            }
            features.push(v);
        }
        let label: usize = cells[d]
            .parse()
            .ok()
            .filter(|&y| y < k)
            .ok_or_else(|| err(lineno, format!("row {row}: label `{}` not in [0, {k})", cells[d])))?;
        let t: i64 = cells[d + 1]
            .parse()
            .map_err(|_| err(lineno, format!("row {row}: true label `{}` is not an integer", cells[d + 1])))?;
        let t = match t {
            -1 => None,
            t if t >= 0 && (t as usize) < k => Some(t as usize),
            t => return Err(err(lineno, format!("row {row}: true label {t} not in [0, {k}) or -1"))),
        };
        labels.push(label);
        truth.push(t);
    }
    if labels.len() != n {
        return Err(err(last, format!("declared {n} rows, found {}", labels.len())));
    }
    Dataset::new(Matrix::new(n, d, features)?, labels, truth, k)
}

/// Synthetic binary generators. `sample` selects an independent draw for
/// the same seed (0 for training data, 1 for a held-out test set).
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Unit-covariance Gaussians at `±(delta/2)·e₁`.
    Gaussians { n: usize, d: usize, delta: f64 },
    /// Class 0 on the unit circle with Gaussian jitter `sigma`, class 1 a
    /// Gaussian blob at the origin (scale 0.3, truncated at radius 0.6).
    Ring { n: usize, sigma: f64 },
}

pub const BLOB_SCALE: f64 = 0.3;
pub const BLOB_MAX_RADIUS: f64 = 0.6;

impl Generator {
    pub fn generate(&self, seed: u64, sample: u32) -> Result<Dataset> {
        let mut rng = stream(seed, Stream::Data, sample);
        match *self {
            Generator::Gaussians { n, d, delta } => {
                if n % 2 != 0 || n == 0 || d == 0 || !(delta >= 0.0) {
                    return Err(Error::Domain(format!(
                        "gaussians need even n > 0, d >= 1, delta >= 0 (n={n}, d={d}, delta={delta})"
                    )));
                }
                let mut x = Matrix::zeros(n, d);
                let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
                for (i, &y) in labels.iter().enumerate() {
                    let row = x.row_mut(i);
                    for v in row.iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                    row[0] += if y == 1 { delta / 2.0 } else { -delta / 2.0 };
                }
                let truth = labels.iter().map(|&y| Some(y)).collect();
                Dataset::new(x, labels, truth, 2)
            }
            Generator::Ring { n, sigma } => {
                if n % 2 != 0 || n == 0 || !(sigma >= 0.0) {
                    return Err(Error::Domain(format!(
                        "ring needs even n > 0 and sigma >= 0 (n={n}, sigma={sigma})"
                    )));
                }
                let mut x = Matrix::zeros(n, 2);
                let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
                for (i, &y) in labels.iter().enumerate() {
                    let row = x.row_mut(i);
                    if y == 0 {
                        // A normalized Gaussian pair is uniform on the circle and,
                        // unlike sin/cos, rounds the same at every opt level.
                        let (ux, uy) = loop {
                            let gx: f64 = rng.sample(StandardNormal);
                            let gy: f64 = rng.sample(StandardNormal);
                            let r = (gx * gx + gy * gy).sqrt();
                            if r > 1e-12 {
                                break (gx / r, gy / r);
                            }
                        };
                        let (jx, jy): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                        row[0] = ux + sigma * jx;
                        row[1] = uy + sigma * jy;
                    } else {
                        loop {
                            let px = BLOB_SCALE * rng.sample::<f64, _>(StandardNormal);
                            let py = BLOB_SCALE * rng.sample::<f64, _>(StandardNormal);
                            if (px * px + py * py).sqrt() <= BLOB_MAX_RADIUS {
                                row[0] = px;
                                row[1] = py;
                                break;
                            }
                        }
                    }
                }
                let truth = labels.iter().map(|&y| Some(y)).collect();
                Dataset::new(x, labels, truth, 2)
            }
        }
    }
}

pub fn gen_two_gaussians(n: usize, d: usize, delta: f64, seed: u64) -> Result<Dataset> {
    Generator::Gaussians { n, d, delta }.generate(seed, 0)
}

pub fn gen_ring_vs_blob(n: usize, sigma: f64, seed: u64) -> Result<Dataset> {
    Generator::Ring { n, sigma }.generate(seed, 0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices outside fold `k`.
    pub fn training(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }
}

/// Seeded permutation of `0..n` cut into `k_folds` contiguous chunks whose
/// sizes differ by at most one.
pub fn kfold(n: usize, k_folds: usize, seed: u64) -> Result<FoldPlan> {
    if k_folds < 2 || n < k_folds {
        return Err(Error::Domain(format!(
            "k-fold needs 2 <= k_folds <= n, got k_folds={k_folds}, n={n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, Stream::Split, 0));
    let (base, extra) = (n / k_folds, n % k_folds);
    let mut folds = Vec::with_capacity(k_folds);
    let mut start = 0;
    for f in 0..k_folds {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(FoldPlan { folds })
}

/// Seeded train/test split; `fraction` of the instances go to the test side.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Domain(format!("test fraction must be in [0, 1), got {fraction}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, Stream::Split, 1));
    let n_test = (fraction * n as f64).round() as usize;
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Epoch-specific shuffled order of `0..n`, cut into batches of `batch_size`
/// (the last one may be short).
pub fn batches(n: usize, batch_size: usize, epoch: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, Stream::Shuffle, epoch as u32));
    perm.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
