use ndarray::{Array1, Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{Dataset, Task};
use crate::error::{Error, Result};
use crate::nn::tape::sigmoid;

pub const EPOCHS: usize = 200;
/// Loss reported when training diverges.
pub const SENTINEL_LOSS: f64 = 1e6;

const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerParams {
    pub learning_rate: f64,
    pub reg_alpha: f64,
    pub reg_lambda: f64,
    pub feature_fraction: f64,
    pub bagging_fraction: f64,
}

impl LearnerParams {
    pub const NAMES: [&'static str; 5] = [
        "learning_rate",
        "reg_alpha",
        "reg_lambda",
        "feature_fraction",
        "bagging_fraction",
    ];

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.learning_rate) || !in_unit(self.feature_fraction) || !in_unit(self.bagging_fraction) {
            return Err(Error::Config(format!(
                "learning rate and fractions must lie in (0, 1]: {self:?}"
            )));
        }
        if !(self.reg_alpha >= 0.0 && self.reg_lambda >= 0.0)
            || !(self.reg_alpha.is_finite() && self.reg_lambda.is_finite())
        {
            return Err(Error::Config(format!("penalties must be non-negative: {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerOutcome {
    pub loss: f64,
    pub diverged: bool,
}

/// Column means and standard deviations over the training rows.
fn standardizer(x: &Array2<f64>, rows: &[usize]) -> (Array1<f64>, Array1<f64>) {
    let sub = x.select(Axis(0), rows);
    let mean = sub.mean_axis(Axis(0)).expect("non-empty");
    let std = sub.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    (mean, std)
}

fn predict(task: Task, x: &Array2<f64>, w: &Array1<f64>, b: f64) -> Array1<f64> {
    let z = x.dot(w) + b;
    match task {
        Task::Regression => z,
        Task::BinaryClassification => z.mapv(sigmoid),
    }
}

fn loss(task: Task, pred: &Array1<f64>, y: &Array1<f64>) -> f64 {
    let n = y.len() as f64;
    match task {
        Task::Regression => pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n,
        Task::BinaryClassification => {
            -pred
                .iter()
                .zip(y)
                .map(|(&p, &t)| {
                    let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
                    t * p.ln() + (1.0 - t) * (1.0 - p).ln()
                })
                .sum::<f64>()
                / n
        }
    }
}

/// Loss of predicting the training-target mean for every validation row.
pub fn constant_predictor_loss(data: &Dataset) -> f64 {
    let y = data.targets.select(Axis(0), &data.train);
    let mean = y.mean().expect("non-empty");
    let valid = data.targets.select(Axis(0), &data.valid);
    let pred = Array1::from_elem(valid.len(), mean);
    loss(data.task, &pred, &valid)
}

/// Linear (regression) or logistic (classification) model trained by
/// full-batch gradient descent with an elastic penalty
/// `reg_alpha·‖w‖₁ + reg_lambda·‖w‖₂²`. The L1 part is applied as a
/// soft-threshold after each step. Features are standardized on the
/// training rows; the bias starts at the constant predictor and is not
/// penalized. Returns the loss on the whole validation split.
pub fn train_eval_linear(data: &Dataset, params: &LearnerParams, seed: u64) -> Result<LearnerOutcome> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = data.n_features();
    let n_feat = ((params.feature_fraction * f as f64).ceil() as usize).clamp(1, f);
    let mut cols = sample(&mut rng, f, n_feat).into_vec();
    cols.sort_unstable();

    let (mean, std) = standardizer(&data.features, &data.train);
    let scaled = ((&data.features - &mean) / &std).select(Axis(1), &cols);
    let x_train = scaled.select(Axis(0), &data.train);
    let y_train = data.targets.select(Axis(0), &data.train);
    let r = data.train.len();
    let n_rows = ((params.bagging_fraction * r as f64).ceil() as usize).clamp(1, r);

    let base = y_train.mean().expect("non-empty");
    let mut b = match data.task {
        Task::Regression => base,
        Task::BinaryClassification => {
            let p = base.clamp(1e-6, 1.0 - 1e-6);
            (p / (1.0 - p)).ln()
        }
    };
    let mut w = Array1::<f64>::zeros(n_feat);
    let lr = params.learning_rate;
    for _ in 0..EPOCHS {
        let rows = sample(&mut rng, r, n_rows).into_vec();
        let x = x_train.select(Axis(0), &rows);
        let y = y_train.select(Axis(0), &rows);
        let resid = predict(data.task, &x, &w, b) - &y;
        let scale = match data.task {
            Task::Regression => 2.0,
            Task::BinaryClassification => 1.0,
        } / n_rows as f64;
        let grad_w = x.t().dot(&resid) * scale + &w * (2.0 * params.reg_lambda);
        let grad_b = resid.sum() * scale;
        w = w - grad_w * lr;
        let thresh = lr * params.reg_alpha;
        w.mapv_inplace(|v| v.signum() * (v.abs() - thresh).max(0.0));
        b -= lr * grad_b;
        if !(b.is_finite() && w.iter().all(|v| v.is_finite())) {
            return Ok(LearnerOutcome {
                loss: SENTINEL_LOSS,
                diverged: true,
            });
        }
    }
    let x_valid = scaled.select(Axis(0), &data.valid);
    let y_valid = data.targets.select(Axis(0), &data.valid);
    let l = loss(data.task, &predict(data.task, &x_valid, &w, b), &y_valid);
    if !l.is_finite() {
        return Ok(LearnerOutcome {
            loss: SENTINEL_LOSS,
            diverged: true,
        });
    }
    Ok(LearnerOutcome {
        loss: l,
        diverged: false,
    })
}
