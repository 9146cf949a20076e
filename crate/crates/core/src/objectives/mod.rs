//! Black-box losses: synthetic surfaces and a small linear learner trained
//! on a dataset, behind a caching evaluator.

mod cache;
mod dataset;
mod learner;
mod surface;

pub use cache::{key_point, quantize_key, EvalCache, QUANTUM};
pub use dataset::{load_csv, Dataset, Task, VALID_FRACTION};
pub use learner::{constant_predictor_loss, train_eval_linear, LearnerOutcome, LearnerParams, EPOCHS, SENTINEL_LOSS};
pub use surface::{surface_rastrigin_like, surface_sphere, Surface};

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::env::HyperParamSpace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "mse")]
    MeanSquaredError,
    #[serde(rename = "cross-entropy")]
    CrossEntropy,
}

impl Metric {
    pub fn task(self) -> Task {
        match self {
            Metric::MeanSquaredError => Task::Regression,
            Metric::CrossEntropy => Task::BinaryClassification,
        }
    }
}

fn default_rows() -> usize {
    400
}

fn default_features() -> usize {
    10
}

fn default_noise() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        metric: Metric,
    },
    SyntheticRegression {
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_features")]
        features: usize,
        #[serde(default = "default_noise")]
        noise: f64,
    },
    SyntheticClassification {
        #[serde(default = "default_rows")]
        rows: usize,
        #[serde(default = "default_features")]
        features: usize,
    },
}

impl DatasetSource {
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, metric } => load_csv(path, metric.task(), seed),
            DatasetSource::SyntheticRegression {
                rows,
                features,
                noise,
            } => Dataset::synthetic_regression(*rows, *features, *noise, seed),
            DatasetSource::SyntheticClassification { rows, features } => {
                Dataset::synthetic_classification(*rows, *features, seed)
            }
        }
    }
}

/// What a run minimizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveSpec {
    Surface(Surface),
    Learner(DatasetSource),
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec::Surface(Surface::Sphere)
    }
}

/// Accepts a surface name, `synthetic-regression`,
/// `synthetic-classification`, `csv:PATH` (squared error) or
/// `csv-binary:PATH` (cross-entropy).
impl FromStr for ObjectiveSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(surface) = Surface::from_name(s) {
            return Ok(ObjectiveSpec::Surface(surface));
        }
        let csv = |path: &str, metric| {
            if path.is_empty() {
                return Err(Error::Config(format!("objective `{s}` names no file")));
            }
            Ok(ObjectiveSpec::Learner(DatasetSource::Csv {
                path: path.into(),
                metric,
            }))
        };
        match s {
            "synthetic-regression" => Ok(ObjectiveSpec::Learner(DatasetSource::SyntheticRegression {
                rows: default_rows(),
                features: default_features(),
                noise: default_noise(),
            })),
            "synthetic-classification" => Ok(ObjectiveSpec::Learner(DatasetSource::SyntheticClassification {
                rows: default_rows(),
                features: default_features(),
            })),
            _ => {
                if let Some(p) = s.strip_prefix("csv:") {
                    csv(p, Metric::MeanSquaredError)
                } else if let Some(p) = s.strip_prefix("csv-binary:") {
                    csv(p, Metric::CrossEntropy)
                } else {
                    Err(Error::Config(format!("unknown objective `{s}`")))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Resolved {
    Surface(Surface),
    Learner {
        data: Arc<Dataset>,
        /// Position of each learner parameter within λ.
        index: [usize; 5],
        seed: u64,
    },
}

/// Evaluates λ on a resolved objective. λ is snapped to the cache grid
/// before evaluation, so results are identical with and without the cache.
#[derive(Debug, Clone)]
pub struct Evaluator {
    objective: Resolved,
    space: HyperParamSpace,
    cache: Option<EvalCache>,
    evaluations: usize,
    diverged: usize,
}

impl Evaluator {
    pub fn new(spec: &ObjectiveSpec, space: &HyperParamSpace, seed: u64, use_cache: bool) -> Result<Self> {
        space.validate()?;
        let objective = match spec {
            ObjectiveSpec::Surface(s) => Resolved::Surface(*s),
            ObjectiveSpec::Learner(source) => {
                let mut index = [0; 5];
                for (slot, name) in index.iter_mut().zip(LearnerParams::NAMES) {
                    *slot = space.index_of(name).ok_or_else(|| {
                        Error::Config(format!("learner objective needs a `{name}` dimension in the space"))
                    })?;
                }
                Resolved::Learner {
                    data: Arc::new(source.load(seed)?),
                    index,
                    seed,
                }
            }
        };
        Ok(Self {
            objective,
            space: space.clone(),
            cache: use_cache.then(EvalCache::new),
            evaluations: 0,
            diverged: 0,
        })
    }

    pub fn space(&self) -> &HyperParamSpace {
        &self.space
    }

    /// Objective calls, cache hits included.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Training runs that diverged and returned [`SENTINEL_LOSS`].
    pub fn diverged(&self) -> usize {
        self.diverged
    }

    pub fn cache(&self) -> Option<&EvalCache> {
        self.cache.as_ref()
    }

    /// The point actually evaluated for `lambda`.
    pub fn snap(&self, lambda: &[f64]) -> Vec<f64> {
        key_point(&quantize_key(lambda))
            .into_iter()
            .zip(&self.space.dims)
            .map(|(v, d)| v.clamp(d.lower, d.upper))
            .collect()
    }

    pub fn eval(&mut self, lambda: &[f64]) -> Result<f64> {
        if lambda.len() != self.space.len() {
            return Err(Error::dims("hyper-parameter vector", self.space.len(), lambda.len()));
        }
        for (v, d) in lambda.iter().zip(&self.space.dims) {
            if !(*v >= d.lower && *v <= d.upper) {
                return Err(Error::Config(format!(
                    "`{}` = {v} outside [{}, {}]",
                    d.name, d.lower, d.upper
                )));
            }
        }
        self.evaluations += 1;
        let key = quantize_key(lambda);
        if let Some(hit) = self.cache.as_mut().and_then(|c| c.get(&key)) {
            return Ok(hit);
        }
        let point = self.snap(lambda);
        let loss = match &self.objective {
            Resolved::Surface(s) => s.eval(&point, &self.space)?,
            Resolved::Learner { data, index, seed } => {
                let params = LearnerParams {
                    learning_rate: point[index[0]],
                    reg_alpha: point[index[1]],
                    reg_lambda: point[index[2]],
                    feature_fraction: point[index[3]],
                    bagging_fraction: point[index[4]],
                };
                let out = train_eval_linear(data, &params, *seed)?;
                if out.diverged {
                    self.diverged += 1;
                }
                out.loss
            }
        };
        if let Some(c) = self.cache.as_mut() {
            c.insert(key, loss);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_optimum_through_evaluator() {
        let space = HyperParamSpace::lightgbm();
        let mut e = Evaluator::new(&ObjectiveSpec::Surface(Surface::Sphere), &space, 0, true).unwrap();
        let at: Vec<f64> = space.dims.iter().map(|d| d.from_unit(0.7)).collect();
        assert!((e.eval(&at).unwrap() - 0.01).abs() < 1e-9);
    }

    #[test]
    fn repeat_is_cache_hit_with_identical_bits() {
        let space = HyperParamSpace::lightgbm();
        let spec: ObjectiveSpec = "synthetic-regression".parse().unwrap();
        let mut e = Evaluator::new(&spec, &space, 3, true).unwrap();
        let l = [0.8, 0.05, 0.9, 1.0, 2.0];
        let a = e.eval(&l).unwrap();
        let b = e.eval(&l).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = e.cache().unwrap();
        assert_eq!((c.hits(), c.misses()), (1, 1));
        assert_eq!(e.evaluations(), 2);
    }

    #[test]
    fn cache_is_transparent() {
        let space = HyperParamSpace::lightgbm();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut seq: Vec<Vec<f64>> = (0..40).map(|_| space.sample_uniform(&mut rng)).collect();
        seq.extend(seq.clone());
        // Points within the same cache cell as earlier ones.
        let nudged: Vec<Vec<f64>> = seq[..10].iter().map(|l| l.iter().map(|v| v + 1e-8).collect()).collect();
        seq.extend(nudged);
        for spec in [
            ObjectiveSpec::Surface(Surface::RastriginLike),
            "synthetic-classification".parse().unwrap(),
        ] {
            let mut on = Evaluator::new(&spec, &space, 1, true).unwrap();
            let mut off = Evaluator::new(&spec, &space, 1, false).unwrap();
            for l in &seq {
                let l: Vec<f64> = l.iter().zip(&space.dims).map(|(v, d)| v.min(d.upper)).collect();
                assert_eq!(on.eval(&l).unwrap().to_bits(), off.eval(&l).unwrap().to_bits());
            }
            assert!(on.cache().unwrap().hits() >= 40);
        }
    }

    #[test]
    fn learner_beats_constant_at_good_lambda() {
        let space = HyperParamSpace::lightgbm();
        let spec: ObjectiveSpec = "synthetic-regression".parse().unwrap();
        let mut e = Evaluator::new(&spec, &space, 5, false).unwrap();
        let data = DatasetSource::SyntheticRegression {
            rows: 400,
            features: 10,
            noise: 0.1,
        }
        .load(5)
        .unwrap();
        // feature_fraction, learning_rate, bagging_fraction, reg_alpha, reg_lambda
        let loss = e.eval(&[1.0, 0.1, 1.0, 0.0, 0.0]).unwrap();
        assert!(loss < constant_predictor_loss(&data));
    }

    #[test]
    fn divergence_counted() {
        let space = HyperParamSpace::lightgbm();
        let spec: ObjectiveSpec = "synthetic-regression".parse().unwrap();
        let mut e = Evaluator::new(&spec, &space, 0, false).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0, 1.0, 0.0, 1000.0]).unwrap(), SENTINEL_LOSS);
        assert_eq!(e.diverged(), 1);
    }

    #[test]
    fn learner_needs_named_dims() {
        let spec: ObjectiveSpec = "synthetic-regression".parse().unwrap();
        let r = Evaluator::new(&spec, &HyperParamSpace::cnn(), 0, false);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn out_of_bounds_rejected() {
        let space = HyperParamSpace::lightgbm();
        let mut e = Evaluator::new(&ObjectiveSpec::default(), &space, 0, false).unwrap();
        assert!(e.eval(&[2.0, 0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(e.eval(&[0.5; 4]).is_err());
    }

    #[test]
    fn spec_parsing_and_json() {
        assert_eq!("sphere".parse::<ObjectiveSpec>().unwrap(), ObjectiveSpec::Surface(Surface::Sphere));
        assert!(matches!(
            "csv-binary:data/x.csv".parse::<ObjectiveSpec>().unwrap(),
            ObjectiveSpec::Learner(DatasetSource::Csv {
                metric: Metric::CrossEntropy,
                ..
            })
        ));
        assert!("nope".parse::<ObjectiveSpec>().is_err());
        let json = serde_json::to_string(&ObjectiveSpec::Surface(Surface::RastriginLike)).unwrap();
        assert_eq!(json, r#"{"surface":"rastrigin-like"}"#);
        let spec: ObjectiveSpec =
            serde_json::from_str(r#"{"learner": {"csv": {"path": "a.csv", "metric": "mse"}}}"#).unwrap();
        assert!(matches!(spec, ObjectiveSpec::Learner(DatasetSource::Csv { .. })));
        let spec: ObjectiveSpec = serde_json::from_str(r#"{"learner": {"synthetic-regression": {"rows": 50}}}"#).unwrap();
        assert_eq!(
            spec,
            ObjectiveSpec::Learner(DatasetSource::SyntheticRegression {
                rows: 50,
                features: 10,
                noise: 0.1
            })
        );
    }
}
