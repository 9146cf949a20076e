use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::env::HyperParamSpace;
use crate::error::{Error, Result};

/// Synthetic response surfaces over the normalized search box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Surface {
    #[serde(rename = "sphere")]
    Sphere,
    #[serde(rename = "rastrigin-like")]
    RastriginLike,
}

impl Surface {
    pub const ALL: [Surface; 2] = [Surface::Sphere, Surface::RastriginLike];

    pub fn name(self) -> &'static str {
        match self {
            Surface::Sphere => "sphere",
            Surface::RastriginLike => "rastrigin-like",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Normalized coordinate at which the surface attains its minimum.
    pub fn argmin(self) -> f64 {
        match self {
            Surface::Sphere => 0.7,
            Surface::RastriginLike => 0.5,
        }
    }

    pub fn minimum(self) -> f64 {
        0.01
    }

    pub fn eval(self, lambda: &[f64], space: &HyperParamSpace) -> Result<f64> {
        let z = normalize(lambda, space)?;
        Ok(match self {
            Surface::Sphere => surface_sphere(&z),
            Surface::RastriginLike => surface_rastrigin_like(&z),
        })
    }
}

fn normalize(lambda: &[f64], space: &HyperParamSpace) -> Result<Vec<f64>> {
    if lambda.len() != space.len() {
        return Err(Error::dims("surface input", space.len(), lambda.len()));
    }
    Ok(space
        .dims
        .iter()
        .zip(lambda)
        .map(|(d, &v)| d.to_unit(v))
        .collect())
}

/// `mean (z − 0.7)² + 0.01` on normalized coordinates.
pub fn surface_sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| (v - 0.7).powi(2)).sum::<f64>() / z.len() as f64 + 0.01
}

/// `mean[(z − 0.5)² − 0.05·cos(6π(z − 0.5))] + 0.06` on normalized
/// coordinates; many shallow local minima around a global one at 0.5.
pub fn surface_rastrigin_like(z: &[f64]) -> f64 {
    z.iter()
        .map(|v| {
            let d = v - 0.5;
            d * d - 0.05 * (6.0 * PI * d).cos()
        })
        .sum::<f64>()
        / z.len() as f64
        + 0.06
}
