use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub discount: f64,
    /// Soft target-update rate.
    pub tau: f64,
    /// Entropy temperature; fixed for the whole run.
    pub temperature: f64,
    /// Shared by the critics and the state-value network.
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub batch_size: usize,
    /// Reparameterized actions averaged by smoothing-Q.
    pub smoothing_samples: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            discount: 0.5,
            tau: 0.005,
            temperature: 0.2,
            critic_lr: 3e-4,
            actor_lr: 3e-3,
            batch_size: 64,
            smoothing_samples: 5,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("agent.discount must lie in [0, 1], got {}", self.discount));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad(format!("agent.tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!(
                "agent.temperature must be non-negative, got {}",
                self.temperature
            ));
        }
        for (name, lr) in [("critic_lr", self.critic_lr), ("actor_lr", self.actor_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(format!("agent.{name} must be positive, got {lr}"));
            }
        }
        if self.batch_size == 0 {
            return bad("agent.batch_size must be positive".into());
        }
        if self.smoothing_samples == 0 {
            return bad("agent.smoothing_samples must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SacConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let base = SacConfig::default();
        let cases = [
            SacConfig { discount: 1.5, ..base },
            SacConfig { tau: 0.0, ..base },
            SacConfig { temperature: -1.0, ..base },
            SacConfig { critic_lr: 0.0, ..base },
            SacConfig { batch_size: 0, ..base },
            SacConfig { smoothing_samples: 0, ..base },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
