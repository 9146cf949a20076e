use rand::Rng;

use crate::nn::Mlp;

pub const STATE_DIM: usize = 8;
pub const ACTION_DIM: usize = 5;
pub const HIDDEN: [usize; 2] = [256, 256];

/// Actor, twin critics, state-value network and its slow target copy.
///
/// The actor emits `2 × action_dim` values: means followed by log standard
/// deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNetworks {
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub value: Mlp,
    pub target_value: Mlp,
    state_dim: usize,
    action_dim: usize,
}

impl AgentNetworks {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        let sizes = |input: usize, output: usize| {
            let mut s = vec![input];
            s.extend_from_slice(hidden);
            s.push(output);
            s
        };
        let actor = Mlp::new(&sizes(state_dim, 2 * action_dim), rng);
        let critic1 = Mlp::new(&sizes(state_dim + action_dim, 1), rng);
        let critic2 = Mlp::new(&sizes(state_dim + action_dim, 1), rng);
        let value = Mlp::new(&sizes(state_dim, 1), rng);
        let target_value = value.clone();
        Self {
            actor,
            critic1,
            critic2,
            value,
            target_value,
            state_dim,
            action_dim,
        }
    }

    /// 8-dimensional state, 5-dimensional action, two hidden layers of 256.
    pub fn reference<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(STATE_DIM, ACTION_DIM, &HIDDEN, rng)
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }
}
