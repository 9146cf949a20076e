//! Hierarchical mixture regularization of replay data.
//!
//! At level `n` a transition is blended with `n` partners drawn from the
//! buffer: the base keeps weight `(1−α)^n` and partner `j` (1-based, in draw
//! order) receives `α(1−α)^{n−j}`. The weights telescope to exactly one, so
//! every mixed value lies in the convex hull of its inputs.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ReplayBuffer, Transition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixConfig {
    /// Partner weight; small values keep mixtures close to the base.
    pub alpha_mix: f64,
    /// Number of hierarchy levels, one augmented transition per level.
    pub levels: usize,
}

impl Default for MixConfig {
    fn default() -> Self {
        Self {
            alpha_mix: 0.1,
            levels: 2,
        }
    }
}

impl MixConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_mix > 0.0 && self.alpha_mix < 1.0) {
            return Err(Error::Config(format!(
                "mix.alpha_mix must lie in (0, 1), got {}",
                self.alpha_mix
            )));
        }
        if self.levels == 0 {
            return Err(Error::Config("mix.levels must be at least 1".into()));
        }
        Ok(())
    }
}

/// `[(1−α)^n, α(1−α)^{n−1}, …, α]`: the base weight followed by the
/// weight of each partner in draw order.
pub fn mix_weights(n: usize, alpha: f64) -> Vec<f64> {
    let keep = 1.0 - alpha;
    std::iter::once(keep.powi(n as i32))
        .chain((1..=n).map(|j| alpha * keep.powi((n - j) as i32)))
        .collect()
}

pub fn mix_scalar(base: f64, partners: &[f64], alpha: f64) -> f64 {
    let w = mix_weights(partners.len(), alpha);
    w[0] * base + partners.iter().zip(&w[1..]).map(|(p, w)| w * p).sum::<f64>()
}

/// Closed-form mixture of `base` with `partners`, componentwise.
pub fn mix_closed_form(base: &[f64], partners: &[&[f64]], alpha: f64) -> Result<Vec<f64>> {
    for p in partners {
        if p.len() != base.len() {
            return Err(Error::dims("mixing partner", base.len(), p.len()));
        }
    }
    let w = mix_weights(partners.len(), alpha);
    Ok((0..base.len())
        .map(|d| {
            w[0] * base[d]
                + partners
                    .iter()
                    .zip(&w[1..])
                    .map(|(p, w)| w * p[d])
                    .sum::<f64>()
        })
        .collect())
}

/// Augmented transitions for one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub transitions: Vec<Transition>,
    /// Levels that drew partners with replacement because the buffer held
    /// fewer entries than the level required.
    pub with_replacement: usize,
}

/// One mixed transition per level `1..=levels`, each with a fresh partner
/// set. Partners are drawn without replacement when the buffer is large
/// enough and with replacement otherwise. State, next-state and reward of a
/// level share the same partners; the action is copied from `t` unchanged.
/// The buffer is only read.
pub fn augment_hierarchical<R: Rng + ?Sized>(
    t: &Transition,
    buffer: &ReplayBuffer,
    config: &MixConfig,
    rng: &mut R,
) -> Result<Augmentation> {
    if buffer.is_empty() {
        return Err(Error::InsufficientSamples {
            requested: 1,
            available: 0,
        });
    }
    let len = buffer.len();
    let mut out = Augmentation {
        transitions: Vec::with_capacity(config.levels),
        with_replacement: 0,
    };
    for n in 1..=config.levels {
        let picks: Vec<usize> = if len >= n {
            sample(rng, len, n).into_vec()
        } else {
            out.with_replacement += 1;
            (0..n).map(|_| rng.random_range(0..len)).collect()
        };
        let partners: Vec<&Transition> = picks
            .iter()
            .map(|&i| buffer.get(i).expect("index in range"))
            .collect();
        let states: Vec<&[f64]> = partners.iter().map(|p| p.state.as_slice()).collect();
        let nexts: Vec<&[f64]> = partners.iter().map(|p| p.next_state.as_slice()).collect();
        let rewards: Vec<f64> = partners.iter().map(|p| p.reward).collect();
        out.transitions.push(Transition {
            state: mix_closed_form(&t.state, &states, config.alpha_mix)?,
            action: t.action.clone(),
            next_state: mix_closed_form(&t.next_state, &nexts, config.alpha_mix)?,
            reward: mix_scalar(t.reward, &rewards, config.alpha_mix),
        });
    }
    Ok(out)
}
