use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub baseline: f64,
    /// Smallest admissible `loss − baseline`.
    pub min_gap: f64,
    /// When set, the baseline follows the smallest loss seen so far minus
    /// this margin instead of staying fixed.
    pub adaptive_margin: Option<f64>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            baseline: 0.0,
            min_gap: 1e-6,
            adaptive_margin: None,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.baseline.is_finite() {
            return Err(Error::Config("reward.baseline must be finite".into()));
        }
        if !(self.min_gap > 0.0 && self.min_gap.is_finite()) {
            return Err(Error::Config(format!(
                "reward.min_gap must be positive, got {}",
                self.min_gap
            )));
        }
        if let Some(m) = self.adaptive_margin {
            if !(m > self.min_gap && m.is_finite()) {
                return Err(Error::Config(format!(
                    "reward.adaptive_margin must exceed min_gap, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// `1/(loss − baseline)`, defined only when the loss clears the baseline by
/// more than `min_gap`.
pub fn compute_reward(loss: f64, config: &RewardConfig) -> Result<f64> {
    if !loss.is_finite() {
        return Err(Error::NonFinite { primitive: "loss" });
    }
    if loss <= config.baseline + config.min_gap {
        return Err(Error::BaselineTooHigh {
            loss,
            baseline: config.baseline,
            min_gap: config.min_gap,
        });
    }
    Ok(1.0 / (loss - config.baseline))
}

/// Reward computation with the optional running-minimum baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    config: RewardConfig,
    best_loss: f64,
}

impl RewardModel {
    pub fn new(config: RewardConfig) -> Self {
        Self {
            config,
            best_loss: f64::INFINITY,
        }
    }

    pub fn baseline(&self) -> f64 {
        self.effective().baseline
    }

    fn effective(&self) -> RewardConfig {
        match self.config.adaptive_margin {
            Some(m) if self.best_loss.is_finite() => RewardConfig {
                baseline: self.best_loss - m,
                ..self.config
            },
            _ => self.config,
        }
    }

    pub fn reward(&mut self, loss: f64) -> Result<f64> {
        if loss.is_finite() {
            self.best_loss = self.best_loss.min(loss);
        }
        compute_reward(loss, &self.effective())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_values() {
        let cfg = RewardConfig::default();
        assert_eq!(compute_reward(0.5, &cfg).unwrap(), 2.0);
        assert!((compute_reward(0.0242, &cfg).unwrap() - 41.3223).abs() < 1e-4);
    }

    #[test]
    fn guard_rejects_loss_at_or_near_baseline() {
        let cfg = RewardConfig {
            baseline: 0.3,
            ..Default::default()
        };
        for loss in [0.3, 0.3 + 1e-6, 0.1] {
            assert!(matches!(
                compute_reward(loss, &cfg),
                Err(Error::BaselineTooHigh { .. })
            ));
        }
        assert!(compute_reward(0.3 + 2e-6, &cfg).is_ok());
        assert!(compute_reward(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn positive_and_monotone() {
        let cfg = RewardConfig::default();
        let mut prev = f64::INFINITY;
        for k in 1..2000 {
            let r = compute_reward(k as f64 * 1e-3, &cfg).unwrap();
            assert!(r > 0.0 && r < prev);
            prev = r;
        }
    }

    #[test]
    fn adaptive_baseline_tracks_best_loss() {
        let mut m = RewardModel::new(RewardConfig {
            adaptive_margin: Some(0.01),
            ..Default::default()
        });
        assert!((m.reward(0.5).unwrap() - 100.0).abs() < 1e-9);
        assert!((m.reward(0.6).unwrap() - 1.0 / 0.11).abs() < 1e-9);
        assert!((m.reward(0.2).unwrap() - 100.0).abs() < 1e-9);
        assert!((m.baseline() - 0.19).abs() < 1e-12);
    }

    #[test]
    fn fixed_model_equals_compute_reward() {
        let mut m = RewardModel::new(RewardConfig::default());
        assert_eq!(m.reward(0.25).unwrap(), 4.0);
        assert_eq!(m.baseline(), 0.0);
    }

    #[test]
    fn validation() {
        RewardConfig::default().validate().unwrap();
        let bad = RewardConfig {
            min_gap: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RewardConfig {
            adaptive_margin: Some(1e-9),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
