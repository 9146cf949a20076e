use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::losses::{policy_loss_grad, q_loss_grad, value_loss_grad, Batch, PolicyNoise};
use super::policy::{select_action, standard_normal, ActionSample};
use super::{AgentNetworks, SacConfig};
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, Mlp, Parameterized};
use crate::replay::Transition;

/// Loss values measured before the corresponding parameter step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub value_loss: f64,
    pub q1_loss: f64,
    pub q2_loss: f64,
    pub policy_loss: f64,
}

/// Networks, one Adam state per trained network and the agent's own noise
/// stream.
#[derive(Debug, Clone)]
pub struct SacAgent {
    pub nets: AgentNetworks,
    config: SacConfig,
    value_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    actor_opt: AdamState,
    rng: ChaCha8Rng,
}

impl SacAgent {
    pub fn new(nets: AgentNetworks, config: SacConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            value_opt: AdamState::new(&nets.value, config.critic_lr),
            critic1_opt: AdamState::new(&nets.critic1, config.critic_lr),
            critic2_opt: AdamState::new(&nets.critic2, config.critic_lr),
            actor_opt: AdamState::new(&nets.actor, config.actor_lr),
            nets,
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn act(&mut self, state: &[f64], deterministic: bool) -> Result<ActionSample> {
        select_action(&self.nets, state, None, deterministic, &mut self.rng)
    }

    /// One pass of value, critic and actor steps followed by the target
    /// update. Noise is drawn in that order: value-target actions, the
    /// log-density action, then the smoothing samples.
    pub fn update_step(&mut self, batch: &[Transition]) -> Result<LossReport> {
        if batch.len() != self.config.batch_size {
            return Err(Error::dims("update batch", self.config.batch_size, batch.len()));
        }
        let batch = Batch::from_transitions(batch)?;
        let (rows, a) = (batch.len(), self.nets.action_dim());
        let value_noise = standard_normal(rows, a, &mut self.rng);
        let policy_noise = PolicyNoise::draw(rows, a, self.config.smoothing_samples, &mut self.rng);
        self.update_with_noise(&batch, &value_noise, &policy_noise)
    }

    pub fn update_with_noise(
        &mut self,
        batch: &Batch,
        value_noise: &ndarray::Array2<f64>,
        policy_noise: &PolicyNoise,
    ) -> Result<LossReport> {
        let cfg = self.config;
        let (value_loss, g) = value_loss_grad(&self.nets, &cfg, &batch.states, value_noise)?;
        adam_step(&mut self.value_opt, &mut self.nets.value, &g)?;

        let q = q_loss_grad(&self.nets, &cfg, batch)?;
        adam_step(&mut self.critic1_opt, &mut self.nets.critic1, &q.grads1)?;
        adam_step(&mut self.critic2_opt, &mut self.nets.critic2, &q.grads2)?;

        let (policy_loss, g) = policy_loss_grad(&self.nets, &cfg, &batch.states, policy_noise)?;
        adam_step(&mut self.actor_opt, &mut self.nets.actor, &g)?;

        soft_update(&self.nets.value, &mut self.nets.target_value, cfg.tau)?;
        Ok(LossReport {
            value_loss,
            q1_loss: q.loss1,
            q2_loss: q.loss2,
            policy_loss,
        })
    }
}

/// `target ← τ·source + (1 − τ)·target`, elementwise.
pub fn soft_update(source: &Mlp, target: &mut Mlp, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    if source.sizes() != target.sizes() {
        return Err(Error::DimensionMismatch {
            context: "soft update".into(),
            expected: source.param_count(),
            got: target.param_count(),
        });
    }
    for (s, t) in source.params().into_iter().zip(target.params_mut()) {
        t.zip_mut_with(s, |t, &s| *t = tau * s + (1.0 - tau) * *t);
    }
    Ok(())
}
