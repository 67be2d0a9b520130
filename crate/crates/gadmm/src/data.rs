//! Datasets: synthetic generation, CSV ingestion, and even sharding.

use std::path::{Path, PathBuf};

use gadmm_core::linalg::Matrix;
use gadmm_core::model::{LocalObjective, LossKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: u64, reason: String },
    #[error("{path}:{line}: logistic target {value} is not binary")]
    NonBinaryTarget { path: PathBuf, line: u64, value: f64 },
    #[error("dataset must have at least one sample and one feature")]
    Shape,
    #[error("cannot split {samples} samples over {workers} workers")]
    TooManyWorkers { samples: usize, workers: usize },
    #[error(transparent)]
    Core(#[from] gadmm_core::Error),
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Matrix,
    pub targets: Vec<f64>,
    pub task: LossKind,
}

impl Dataset {
    pub fn samples(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Scales every feature column to zero mean and unit variance. Constant
    /// columns are only centered.
    pub fn standardize(&mut self) {
        let (m, d) = (self.samples(), self.dim());
        for j in 0..d {
            let mean = (0..m).map(|i| self.features[(i, j)]).sum::<f64>() / m as f64;
            let var = (0..m).map(|i| (self.features[(i, j)] - mean).powi(2)).sum::<f64>() / m as f64;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..m {
                self.features[(i, j)] = (self.features[(i, j)] - mean) / scale;
            }
        }
    }
}

/// Gaussian features and a Gaussian ground-truth model. Linear targets carry
/// `N(0, 0.01)` noise; logistic labels are Bernoulli with the sigmoid of the
/// clean response.
pub fn gen_synthetic(task: LossKind, m: usize, d: usize, seed: u64) -> Result<Dataset, DataError> {
    if m == 0 || d == 0 {
        return Err(DataError::Shape);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let data: Vec<f64> = (0..m * d).map(|_| rng.sample(StandardNormal)).collect();
    let features = Matrix::from_row_major(m, d, data).ok_or(DataError::Shape)?;
    let clean = features.mul_vec(&theta);
    let targets = match task {
        LossKind::Linear => clean.iter().map(|c| c + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect(),
        LossKind::Logistic => clean
            .iter()
            .map(|c| if rng.random::<f64>() < 1.0 / (1.0 + (-c).exp()) { 1.0 } else { 0.0 })
            .collect(),
    };
    Ok(Dataset { features, targets, task })
}

/// The model used to draw [`gen_synthetic`] data for the same seed.
pub fn synthetic_truth(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Reads comma-separated numeric rows; the last column is the target. A first
/// row holding any non-numeric field is treated as a header. Logistic
/// targets must be `0/1` or `-1/1` (the latter is mapped to `0/1`).
pub fn load_csv(path: impl AsRef<Path>, task: LossKind) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io { path: path.into(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let malformed = |line: u64, reason: String| DataError::Malformed { path: path.into(), line, reason };

    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push((line, values)),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(malformed(line, format!("non-numeric field ({e})"))),
        }
    }
    let Some((_, first)) = rows.first() else {
        return Err(DataError::Empty { path: path.into() });
    };
    let width = first.len();
    if width < 2 {
        return Err(malformed(rows[0].0, "need at least one feature column and a target".into()));
    }

    let mut data = Vec::with_capacity(rows.len() * (width - 1));
    let mut targets = Vec::with_capacity(rows.len());
    for (line, values) in &rows {
        if values.len() != width {
            return Err(malformed(*line, format!("expected {width} fields, found {}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(malformed(*line, format!("non-finite value {v}")));
        }
        data.extend_from_slice(&values[..width - 1]);
        targets.push(values[width - 1]);
    }
    if task == LossKind::Logistic {
        let signed = targets.iter().any(|&y| y == -1.0);
        for ((line, _), y) in rows.iter().zip(targets.iter_mut()) {
            *y = match (*y, signed) {
                (v, false) if v == 0.0 || v == 1.0 => v,
                (v, true) if v == -1.0 || v == 1.0 => (v + 1.0) / 2.0,
                (value, _) => return Err(DataError::NonBinaryTarget { path: path.into(), line: *line, value }),
            };
        }
    }
    let features = Matrix::from_row_major(rows.len(), width - 1, data).ok_or(DataError::Shape)?;
    Ok(Dataset { features, targets, task })
}

/// Splits `ds` into contiguous blocks, the first `m mod n` one row longer.
pub fn partition_even(ds: &Dataset, n_workers: usize) -> Result<Vec<LocalObjective>, DataError> {
    let m = ds.samples();
    if n_workers == 0 || n_workers > m {
        return Err(DataError::TooManyWorkers { samples: m, workers: n_workers });
    }
    let (base, extra) = (m / n_workers, m % n_workers);
    let d = ds.dim();
    let mut start = 0;
    (0..n_workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let rows = start..start + len;
            start += len;
            let x = Matrix::from_row_major(len, d, ds.features.as_slice()[rows.start * d..rows.end * d].to_vec())
                .ok_or(DataError::Shape)?;
            Ok(LocalObjective::new(ds.task, x, ds.targets[rows].to_vec())?)
        })
        .collect()
}
