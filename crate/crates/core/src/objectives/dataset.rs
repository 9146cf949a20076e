use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Squared-error regression.
    Regression,
    /// 0/1 targets scored by cross-entropy.
    BinaryClassification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub targets: Array1<f64>,
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub task: Task,
}

/// Fraction of rows held out for validation.
pub const VALID_FRACTION: f64 = 0.2;

impl Dataset {
    /// Shuffles rows with `seed` and holds out 20% for validation.
    pub fn new(features: Array2<f64>, targets: Array1<f64>, task: Task, seed: u64) -> Result<Self> {
        let rows = features.nrows();
        if targets.len() != rows {
            return Err(Error::dims("dataset targets", rows, targets.len()));
        }
        if rows < 2 {
            return Err(Error::Config(format!(
                "dataset needs at least 2 rows for a train/validation split, got {rows}"
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::Config("dataset has no feature columns".into()));
        }
        if !features.iter().chain(targets.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite { primitive: "dataset" });
        }
        if task == Task::BinaryClassification && !targets.iter().all(|&t| t == 0.0 || t == 1.0) {
            return Err(Error::Config("binary targets must be 0 or 1".into()));
        }
        let mut order: Vec<usize> = (0..rows).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_valid = ((rows as f64 * VALID_FRACTION).round() as usize).clamp(1, rows - 1);
        let valid = order.split_off(rows - n_valid);
        Ok(Self {
            features,
            targets,
            train: order,
            valid,
            task,
        })
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// `y = x·w + noise` with standard-normal features and weights.
    pub fn synthetic_regression(rows: usize, features: usize, noise: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
        let x = Array2::from_shape_simple_fn((rows, features), || rng.sample(StandardNormal));
        let y = Array1::from_shape_fn(rows, |i| {
            let clean: f64 = x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            clean + noise * rng.sample::<f64, _>(StandardNormal)
        });
        Self::new(x, y, Task::Regression, seed)
    }

    /// Labels from the sign of a random hyperplane, so the classes are
    /// linearly separable.
    pub fn synthetic_classification(rows: usize, features: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
        let x = Array2::from_shape_simple_fn((rows, features), || rng.sample(StandardNormal));
        let y = Array1::from_shape_fn(rows, |i| {
            let s: f64 = x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum();
            if s > 0.0 {
                1.0
            } else {
                0.0
            }
        });
        Self::new(x, y, Task::BinaryClassification, seed)
    }
}

/// Reads a header row followed by numeric rows; the last column is the
/// target.
pub fn load_csv(path: &Path, task: Task, seed: u64) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let width = reader.headers().map_err(|e| csv_error(path, e))?.len();
    if width < 2 {
        if width == 0 {
            return Err(Error::EmptyDataset(path.to_path_buf()));
        }
        return Err(Error::MalformedCsv {
            path: path.to_path_buf(),
            line: 1,
            message: "need at least one feature column and a target column".into(),
        });
    }
    let mut data = Vec::new();
    let mut targets = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::MalformedCsv {
                path: path.to_path_buf(),
                line,
                message: format!("column {}: `{cell}` is not a number", col + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::MalformedCsv {
                    path: path.to_path_buf(),
                    line,
                    message: format!("column {}: non-finite value", col + 1),
                });
            }
            if col + 1 == width {
                if task == Task::BinaryClassification && v != 0.0 && v != 1.0 {
                    return Err(Error::MalformedCsv {
                        path: path.to_path_buf(),
                        line,
                        message: format!("binary target must be 0 or 1, got {v}"),
                    });
                }
                targets.push(v);
            } else {
                data.push(v);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    let rows = targets.len();
    let features = Array2::from_shape_vec((rows, width - 1), data).expect("rectangular rows");
    Dataset::new(features, Array1::from(targets), task, seed)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::MalformedCsv {
            path: path.to_path_buf(),
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::MalformedCsv {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}
