//! The tuning MDP: a frozen, randomly initialized LSTM cell produces the
//! next state from the proposed action, and the reward is the reciprocal of
//! the validation loss above a baseline.

mod reward;
mod space;

pub use reward::{compute_reward, RewardConfig, RewardModel};
pub use space::{DecodedAction, HyperParamDim, HyperParamSpace, Scale};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{lstm_step, LstmCellParams};

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
    pub step_index: usize,
}

impl EnvState {
    fn ones(dim: usize) -> Self {
        Self {
            hidden: vec![1.0; dim],
            cell: vec![1.0; dim],
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub loss: f64,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HpoEnv {
    lstm: LstmCellParams,
    space: HyperParamSpace,
    rewards: RewardModel,
    horizon: usize,
    state: EnvState,
    clamped_actions: usize,
}

impl HpoEnv {
    pub fn new<R: Rng + ?Sized>(
        space: HyperParamSpace,
        state_dim: usize,
        horizon: usize,
        reward: RewardConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let lstm = LstmCellParams::init(space.len(), state_dim, rng);
        Self::with_params(lstm, space, horizon, reward)
    }

    pub fn with_params(
        lstm: LstmCellParams,
        space: HyperParamSpace,
        horizon: usize,
        reward: RewardConfig,
    ) -> Result<Self> {
        space.validate()?;
        reward.validate()?;
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if lstm.input_dim() != space.len() {
            return Err(Error::dims("transition input", space.len(), lstm.input_dim()));
        }
        let state = EnvState::ones(lstm.hidden_dim());
        Ok(Self {
            lstm,
            space,
            rewards: RewardModel::new(reward),
            horizon,
            state,
            clamped_actions: 0,
        })
    }

    /// Hidden and cell back to all ones; the transition weights are kept.
    pub fn reset(&mut self) -> &EnvState {
        self.state = EnvState::ones(self.lstm.hidden_dim());
        &self.state
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }

    pub fn space(&self) -> &HyperParamSpace {
        &self.space
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.lstm.hidden_dim()
    }

    pub fn clamped_actions(&self) -> usize {
        self.clamped_actions
    }

    /// Decodes `action`, evaluates it, and advances the LSTM with the raw
    /// action as input.
    pub fn step<F>(&mut self, action: &[f64], objective: F) -> Result<StepOutcome>
    where
        F: FnOnce(&[f64]) -> Result<f64>,
    {
        if self.state.step_index >= self.horizon {
            return Err(Error::Config(format!(
                "episode already finished after {} steps; reset first",
                self.horizon
            )));
        }
        let decoded = self.space.decode_action(action)?;
        self.clamped_actions += decoded.clamped;
        let loss = objective(&decoded.lambda)?;
        let reward = self.rewards.reward(loss)?;
        let input: Vec<f64> = action.iter().map(|a| a.clamp(-1.0, 1.0)).collect();
        let (hidden, cell) = lstm_step(&self.lstm, &input, &self.state.hidden, &self.state.cell)?;
        self.state.hidden = hidden;
        self.state.cell = cell;
        self.state.step_index += 1;
        Ok(StepOutcome {
            next_state: self.state.hidden.clone(),
            reward,
            done: self.state.step_index == self.horizon,
            loss,
            lambda: decoded.lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env(seed: u64) -> HpoEnv {
        HpoEnv::new(
            HyperParamSpace::lightgbm(),
            8,
            10,
            RewardConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap()
    }

    fn const_loss(_: &[f64]) -> Result<f64> {
        Ok(0.5)
    }

    #[test]
    fn reset_gives_all_ones() {
        let mut e = env(0);
        assert_eq!(e.reset().hidden, vec![1.0; 8]);
        let a = e.reset().clone();
        assert_eq!(a, e.reset().clone());
        assert_eq!(a.step_index, 0);
    }

    #[test]
    fn reset_after_episode_matches_fresh_env() {
        let mut e = env(1);
        let fresh = env(1);
        e.reset();
        for _ in 0..10 {
            e.step(&[0.2; 5], const_loss).unwrap();
        }
        e.reset();
        assert_eq!(e.state(), fresh.state());
        let (mut a, mut b) = (e.clone(), fresh.clone());
        assert_eq!(
            a.step(&[0.1; 5], const_loss).unwrap(),
            b.step(&[0.1; 5], const_loss).unwrap()
        );
    }

    #[test]
    fn zero_weights_give_closed_form_state() {
        let mut e = HpoEnv::with_params(
            LstmCellParams::zeros(5, 8),
            HyperParamSpace::lightgbm(),
            10,
            RewardConfig::default(),
        )
        .unwrap();
        for action in [[0.9; 5], [-0.3; 5]] {
            e.reset();
            let out = e.step(&action, const_loss).unwrap();
            for h in out.next_state {
                assert!((h - 0.231059).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn done_only_at_horizon() {
        let mut e = env(2);
        e.reset();
        for t in 1..=10 {
            let out = e.step(&[0.0; 5], const_loss).unwrap();
            assert_eq!(out.done, t == 10);
            assert_eq!(out.reward, 2.0);
        }
        assert!(e.step(&[0.0; 5], const_loss).is_err());
    }

    #[test]
    fn identical_seeds_replay_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actions: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let run = |seed| {
            let mut e = env(seed);
            let mut trace = Vec::new();
            for chunk in actions.chunks(10) {
                e.reset();
                for a in chunk {
                    trace.push(e.step(a, |l| Ok(0.1 + l[0])).unwrap());
                }
            }
            trace
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn state_depends_on_action() {
        let mut a = env(6);
        let mut b = env(6);
        let sa = a.step(&[0.5; 5], const_loss).unwrap().next_state;
        let sb = b.step(&[-0.5; 5], const_loss).unwrap().next_state;
        assert_ne!(sa, sb);
    }

    #[test]
    fn objective_sees_decoded_lambda_and_clamps_count() {
        let mut e = env(7);
        let out = e
            .step(&[1.0, -1.0, 0.0, 2.0, -1.0], |l| {
                assert_eq!(l[0], 1.0);
                assert_eq!(l[1], 1e-5);
                assert_eq!(l[3], 1000.0);
                Ok(0.25)
            })
            .unwrap();
        assert_eq!(out.reward, 4.0);
        assert_eq!(e.clamped_actions(), 1);
    }

    #[test]
    fn baseline_errors_propagate() {
        let mut e = env(8);
        assert!(matches!(
            e.step(&[0.0; 5], |_| Ok(0.0)),
            Err(Error::BaselineTooHigh { .. })
        ));
    }
}
