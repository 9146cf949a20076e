//! Value, twin-critic and smoothing-Q policy losses.
//!
//! Each loss has a `*_grad` form that also returns the gradient for the
//! network it trains. Noise is passed in explicitly so that losses can be
//! recomputed exactly; the plain forms draw it from a generator.

use ndarray::Array2;
use rand::Rng;

use super::policy::{smoothing_q_on, standard_normal, BoundCritics, PolicyHead};
use super::{AgentNetworks, SacConfig};
use crate::error::{Error, Result};
use crate::nn::{GradientSet, Tape};
use crate::replay::Transition;

/// A batch of transitions laid out as row matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub next_states: Array2<f64>,
    pub rewards: Array2<f64>,
}

impl Batch {
    pub fn from_transitions(batch: &[Transition]) -> Result<Self> {
        let first = batch.first().ok_or(Error::EmptyBatch("transition batch"))?;
        let (s, a) = (first.state.len(), first.action.len());
        let rows = batch.len();
        let gather = |width: usize, f: &dyn Fn(&Transition) -> &[f64]| -> Result<Array2<f64>> {
            let mut data = Vec::with_capacity(rows * width);
            for t in batch {
                let v = f(t);
                if v.len() != width {
                    return Err(Error::dims("batch row", width, v.len()));
                }
                data.extend_from_slice(v);
            }
            Ok(Array2::from_shape_vec((rows, width), data).expect("shape"))
        };
        Ok(Self {
            states: gather(s, &|t| &t.state)?,
            actions: gather(a, &|t| &t.action)?,
            next_states: gather(s, &|t| &t.next_state)?,
            rewards: Array2::from_shape_fn((rows, 1), |(i, _)| batch[i].reward),
        })
    }

    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn non_empty(states: &Array2<f64>, what: &'static str) -> Result<()> {
    if states.nrows() == 0 {
        Err(Error::EmptyBatch(what))
    } else {
        Ok(())
    }
}

/// Soft state-value target `min(Q1, Q2)(s, ã) − temperature·log π(ã|s)`
/// with `ã` drawn from the current policy using `noise`.
pub fn value_target(
    nets: &AgentNetworks,
    config: &SacConfig,
    states: &Array2<f64>,
    noise: &Array2<f64>,
) -> Result<Array2<f64>> {
    let tape = Tape::new();
    let actor = nets.actor.bind(&tape, false);
    let critics = BoundCritics::bind(nets, &tape, false);
    let s = tape.constant(states.clone());
    let head = PolicyHead::new(&nets.actor, &actor, s)?;
    let (a, log_prob) = head.sample(noise);
    let target = critics
        .min_q(s, a)?
        .sub(log_prob.scale(config.temperature));
    tape.check_finite()?;
    let out = target.value().clone();
    Ok(out)
}

/// `mean ½(V(s) − target)²`; gradient flows only into the value network.
pub fn value_loss_grad(
    nets: &AgentNetworks,
    config: &SacConfig,
    states: &Array2<f64>,
    noise: &Array2<f64>,
) -> Result<(f64, GradientSet)> {
    non_empty(states, "value loss")?;
    let target = value_target(nets, config, states, noise)?;
    let tape = Tape::new();
    let bound = nets.value.bind(&tape, true);
    let v = nets.value.forward_on(tape.constant(states.clone()), &bound)?;
    let loss = v.sub(tape.constant(target)).square().mean().scale(0.5);
    let grads = tape.backward(loss)?;
    Ok((loss.item(), GradientSet::from_tape(&grads, &bound)))
}

pub fn value_loss<R: Rng + ?Sized>(
    nets: &AgentNetworks,
    config: &SacConfig,
    states: &Array2<f64>,
    rng: &mut R,
) -> Result<f64> {
    let noise = standard_normal(states.nrows(), nets.action_dim(), rng);
    Ok(value_loss_grad(nets, config, states, &noise)?.0)
}

/// Bellman target `r + γ·V_target(s′)` shared by both critics.
pub fn q_target(nets: &AgentNetworks, config: &SacConfig, batch: &Batch) -> Result<Array2<f64>> {
    let next_v = nets.target_value.forward_batch(&batch.next_states)?;
    Ok(&batch.rewards + &(next_v * config.discount))
}

pub struct QLossGrad {
    pub loss1: f64,
    pub loss2: f64,
    pub grads1: GradientSet,
    pub grads2: GradientSet,
}

pub fn q_loss_grad(nets: &AgentNetworks, config: &SacConfig, batch: &Batch) -> Result<QLossGrad> {
    non_empty(&batch.states, "q loss")?;
    let target = q_target(nets, config, batch)?;
    let tape = Tape::new();
    let critics = BoundCritics::bind(nets, &tape, true);
    let sa = tape
        .constant(batch.states.clone())
        .concat_cols(tape.constant(batch.actions.clone()));
    let target = tape.constant(target);
    let l1 = critics.q1(sa)?.sub(target).square().mean().scale(0.5);
    let l2 = critics.q2(sa)?.sub(target).square().mean().scale(0.5);
    // The critics share no parameters, so one pass over the sum yields
    // each critic's own gradient.
    let grads = tape.backward(l1.add(l2))?;
    Ok(QLossGrad {
        loss1: l1.item(),
        loss2: l2.item(),
        grads1: GradientSet::from_tape(&grads, &critics.critic1.1),
        grads2: GradientSet::from_tape(&grads, &critics.critic2.1),
    })
}

pub fn q_loss(nets: &AgentNetworks, config: &SacConfig, batch: &[Transition]) -> Result<(f64, f64)> {
    let batch = Batch::from_transitions(batch)?;
    let r = q_loss_grad(nets, config, &batch)?;
    Ok((r.loss1, r.loss2))
}

/// Noise consumed by one policy-loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNoise {
    /// Drives the action whose log-density enters the loss.
    pub log_prob: Array2<f64>,
    /// One block per smoothing sample.
    pub smoothing: Vec<Array2<f64>>,
}

impl PolicyNoise {
    pub fn draw<R: Rng + ?Sized>(rows: usize, action_dim: usize, m: usize, rng: &mut R) -> Self {
        let log_prob = standard_normal(rows, action_dim, rng);
        let smoothing = (0..m).map(|_| standard_normal(rows, action_dim, rng)).collect();
        Self {
            log_prob,
            smoothing,
        }
    }
}

/// `mean[temperature·log π(ã|s) − sq(s)]` with reparameterized actions;
/// the gradient reaches the actor through the log-density and through every
/// smoothing action fed to the (frozen) critics.
pub fn policy_loss_grad(
    nets: &AgentNetworks,
    config: &SacConfig,
    states: &Array2<f64>,
    noise: &PolicyNoise,
) -> Result<(f64, GradientSet)> {
    non_empty(states, "policy loss")?;
    let tape = Tape::new();
    let actor = nets.actor.bind(&tape, true);
    let critics = BoundCritics::bind(nets, &tape, false);
    let s = tape.constant(states.clone());
    let head = PolicyHead::new(&nets.actor, &actor, s)?;
    let (_, log_prob) = head.sample(&noise.log_prob);
    let sq = smoothing_q_on(&critics, &head, s, &noise.smoothing)?;
    let loss = log_prob.scale(config.temperature).sub(sq).mean();
    let grads = tape.backward(loss)?;
    Ok((loss.item(), GradientSet::from_tape(&grads, &actor)))
}

pub fn policy_loss<R: Rng + ?Sized>(
    nets: &AgentNetworks,
    config: &SacConfig,
    states: &Array2<f64>,
    rng: &mut R,
) -> Result<f64> {
    let noise = PolicyNoise::draw(
        states.nrows(),
        nets.action_dim(),
        config.smoothing_samples,
        rng,
    );
    Ok(policy_loss_grad(nets, config, states, &noise)?.0)
}
