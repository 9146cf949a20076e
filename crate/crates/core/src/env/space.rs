use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log10,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParamDim {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub scale: Scale,
    #[serde(default)]
    pub integer: bool,
}

impl HyperParamDim {
    pub fn linear(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            scale: Scale::Linear,
            integer: false,
        }
    }

    pub fn integer(name: &str, lower: f64, upper: f64) -> Self {
        Self {
            integer: true,
            ..Self::linear(name, lower, upper)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("dimension `{}`: {msg}", self.name)));
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return bad(format!("need lower < upper, got [{}, {}]", self.lower, self.upper));
        }
        if self.scale == Scale::Log10 && self.lower <= 0.0 {
            return bad("log10 scale needs a positive lower bound".into());
        }
        if self.integer && self.lower.ceil() > self.upper.floor() {
            return bad("integer range contains no integer".into());
        }
        Ok(())
    }

    /// Maps `t ∈ [0, 1]` onto the dimension's range.
    pub fn from_unit(&self, t: f64) -> f64 {
        let v = match self.scale {
            Scale::Linear => self.lower + t * (self.upper - self.lower),
            Scale::Log10 => {
                let (lo, hi) = (self.lower.log10(), self.upper.log10());
                10f64.powf(lo + t * (hi - lo))
            }
        };
        if self.integer {
            v.round().clamp(self.lower.ceil(), self.upper.floor())
        } else {
            v.clamp(self.lower, self.upper)
        }
    }

    /// Position of `value` within the bounds on the linear axis, in `[0, 1]`.
    pub fn to_unit(&self, value: f64) -> f64 {
        (value - self.lower) / (self.upper - self.lower)
    }
}

/// Serialized as a list of dimensions; also read from a preset name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperParamSpace {
    #[serde(deserialize_with = "dims_or_preset")]
    pub dims: Vec<HyperParamDim>,
}

fn dims_or_preset<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<HyperParamDim>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Preset(String),
        Dims(Vec<HyperParamDim>),
    }
    match Repr::deserialize(d)? {
        Repr::Dims(dims) => Ok(dims),
        Repr::Preset(name) => HyperParamSpace::preset(&name)
            .map(|s| s.dims)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown space preset `{name}` (lightgbm, cnn)"))),
    }
}

impl Default for HyperParamSpace {
    fn default() -> Self {
        Self::lightgbm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedAction {
    pub lambda: Vec<f64>,
    /// Action entries that lay outside `[-1, 1]` and were clamped.
    pub clamped: usize,
}

impl HyperParamSpace {
    pub fn new(dims: Vec<HyperParamDim>) -> Result<Self> {
        let s = Self { dims };
        s.validate()?;
        Ok(s)
    }

    /// Gradient-boosting style space: fractions, step size and penalties.
    pub fn lightgbm() -> Self {
        Self {
            dims: vec![
                HyperParamDim::linear("feature_fraction", 1e-5, 1.0),
                HyperParamDim::linear("learning_rate", 1e-5, 1.0),
                HyperParamDim::linear("bagging_fraction", 1e-5, 1.0),
                HyperParamDim::linear("reg_alpha", 0.0, 1000.0),
                HyperParamDim::linear("reg_lambda", 0.0, 1000.0),
            ],
        }
    }

    /// Small convolutional network space.
    pub fn cnn() -> Self {
        Self {
            dims: vec![
                HyperParamDim::integer("conv_channels", 1.0, 10.0),
                HyperParamDim::integer("conv_kernel", 1.0, 5.0),
                HyperParamDim::integer("conv_stride", 1.0, 5.0),
                HyperParamDim::integer("fc_nodes", 10.0, 1000.0),
                HyperParamDim::linear("learning_rate", 1e-5, 1.0),
            ],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "lightgbm" => Some(Self::lightgbm()),
            "cnn" => Some(Self::cnn()),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("search space has no dimensions".into()));
        }
        self.dims.iter().try_for_each(HyperParamDim::validate)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dims.iter().position(|d| d.name == name)
    }

    /// Per-dimension `t = (a + 1)/2` mapped through the dimension's scale.
    pub fn decode_action(&self, action: &[f64]) -> Result<DecodedAction> {
        if action.len() != self.dims.len() {
            return Err(Error::dims("action", self.dims.len(), action.len()));
        }
        let mut clamped = 0;
        let lambda = self
            .dims
            .iter()
            .zip(action)
            .map(|(dim, &a)| {
                if !a.is_finite() {
                    return Err(Error::NonFinite { primitive: "action" });
                }
                if a.abs() > 1.0 {
                    clamped += 1;
                }
                Ok(dim.from_unit((a.clamp(-1.0, 1.0) + 1.0) / 2.0))
            })
            .collect::<Result<_>>()?;
        Ok(DecodedAction { lambda, clamped })
    }

    /// Point drawn uniformly on each dimension's axis.
    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| d.from_unit(rng.random_range(0.0..=1.0)))
            .collect()
    }
}
