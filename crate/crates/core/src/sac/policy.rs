//! Reparameterized tanh-Gaussian policy and the smoothing-Q estimator.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::AgentNetworks;
use crate::error::{Error, Result};
use crate::nn::gaussian::{gaussian_log_prob_on, tanh_squash_correction_on};
use crate::nn::{gaussian_log_prob, tanh_squash_correction, Mlp, Tape, Var, LOG_STD_MAX, LOG_STD_MIN};

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    pub pre_squash: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

/// Standard-normal matrix, drawn row-major.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

/// Draws an action for a single state. With `deterministic` the noise is
/// zero; otherwise `noise` is used when given and drawn from `rng` when not.
pub fn select_action<R: Rng + ?Sized>(
    nets: &AgentNetworks,
    state: &[f64],
    noise: Option<&[f64]>,
    deterministic: bool,
    rng: &mut R,
) -> Result<ActionSample> {
    let a = nets.action_dim();
    if state.len() != nets.state_dim() {
        return Err(Error::dims("policy state", nets.state_dim(), state.len()));
    }
    if let Some(n) = noise {
        if n.len() != a {
            return Err(Error::dims("policy noise", a, n.len()));
        }
    }
    let out = crate::nn::mlp_forward(&nets.actor, state)?;
    if !out.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite {
            primitive: "actor output",
        });
    }
    let (mean, raw_log_std) = out.split_at(a);
    let log_std: Vec<f64> = raw_log_std
        .iter()
        .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
        .collect();
    let eps: Vec<f64> = if deterministic {
        vec![0.0; a]
    } else if let Some(n) = noise {
        n.to_vec()
    } else {
        (0..a).map(|_| rng.sample(StandardNormal)).collect()
    };
    let pre_squash: Vec<f64> = (0..a)
        .map(|d| mean[d] + log_std[d].exp() * eps[d])
        .collect();
    let action = pre_squash.iter().map(|u| u.tanh()).collect();
    let log_prob =
        gaussian_log_prob(mean, &log_std, &pre_squash)? - tanh_squash_correction(&pre_squash);
    Ok(ActionSample {
        pre_squash,
        action,
        log_prob,
    })
}

/// Actor output split into mean and clamped log standard deviation.
#[derive(Clone, Copy)]
pub struct PolicyHead<'t> {
    pub mean: Var<'t>,
    pub log_std: Var<'t>,
}

impl<'t> PolicyHead<'t> {
    pub fn new(actor: &Mlp, bound: &[Var<'t>], states: Var<'t>) -> Result<Self> {
        let out = actor.forward_on(states, bound)?;
        let a = out.shape().1 / 2;
        Ok(Self {
            mean: out.slice_cols(0, a),
            log_std: out.slice_cols(a, 2 * a).clamp(LOG_STD_MIN, LOG_STD_MAX),
        })
    }

    fn pre_squash(&self, noise: &Array2<f64>) -> Var<'t> {
        let eps = self.mean.tape().constant(noise.clone());
        self.mean.add(self.log_std.exp().mul(eps))
    }

    /// Squashed actions `tanh(mean + σ·ε)` for a batch of noise rows.
    pub fn actions(&self, noise: &Array2<f64>) -> Var<'t> {
        self.pre_squash(noise).tanh()
    }

    /// Squashed actions together with their (rows × 1) log-densities.
    pub fn sample(&self, noise: &Array2<f64>) -> (Var<'t>, Var<'t>) {
        let u = self.pre_squash(noise);
        let log_prob =
            gaussian_log_prob_on(self.mean, self.log_std, u).sub(tanh_squash_correction_on(u));
        (u.tanh(), log_prob)
    }
}

/// Critic parameters already placed on a tape.
pub struct BoundCritics<'n, 't> {
    pub critic1: (&'n Mlp, Vec<Var<'t>>),
    pub critic2: (&'n Mlp, Vec<Var<'t>>),
}

impl<'n, 't> BoundCritics<'n, 't> {
    pub fn bind(nets: &'n AgentNetworks, tape: &'t Tape, trainable: bool) -> Self {
        Self {
            critic1: (&nets.critic1, nets.critic1.bind(tape, trainable)),
            critic2: (&nets.critic2, nets.critic2.bind(tape, trainable)),
        }
    }

    pub fn q1(&self, state_action: Var<'t>) -> Result<Var<'t>> {
        self.critic1.0.forward_on(state_action, &self.critic1.1)
    }

    pub fn q2(&self, state_action: Var<'t>) -> Result<Var<'t>> {
        self.critic2.0.forward_on(state_action, &self.critic2.1)
    }

    /// Elementwise minimum of the twin critics.
    pub fn min_q(&self, states: Var<'t>, actions: Var<'t>) -> Result<Var<'t>> {
        let sa = states.concat_cols(actions);
        Ok(self.q1(sa)?.min(self.q2(sa)?))
    }
}

/// Running-mean smoothing-Q on the tape: for each noise block `i`
/// (0-based) `sq ← (sq·i + q_i)/(i+1)` with `q_i` the twin minimum at the
/// reparameterized action. Gradients reach the actor through the actions.
pub fn smoothing_q_on<'t>(
    critics: &BoundCritics<'_, 't>,
    head: &PolicyHead<'t>,
    states: Var<'t>,
    noises: &[Array2<f64>],
) -> Result<Var<'t>> {
    assert!(!noises.is_empty(), "smoothing-Q needs at least one sample");
    let tape = states.tape();
    let mut sq = tape.constant(Array2::zeros((states.shape().0, 1)));
    for (i, noise) in noises.iter().enumerate() {
        let q = critics.min_q(states, head.actions(noise))?;
        sq = running_mean_step(sq, i, q);
    }
    Ok(sq)
}

/// `(sq·i + q)/(i+1)`: folds the `i`-th (0-based) value into a running mean.
pub fn running_mean_step<'t>(sq: Var<'t>, i: usize, q: Var<'t>) -> Var<'t> {
    let i = i as f64;
    sq.scale(i).add(q).scale(1.0 / (i + 1.0))
}

/// Smoothing-Q value at one state using `m` fresh noise draws from `rng`.
pub fn smoothing_q<R: Rng + ?Sized>(
    nets: &AgentNetworks,
    state: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Config("smoothing-Q needs M >= 1".into()));
    }
    if state.len() != nets.state_dim() {
        return Err(Error::dims("smoothing-Q state", nets.state_dim(), state.len()));
    }
    let noises: Vec<Array2<f64>> = (0..m)
        .map(|_| standard_normal(1, nets.action_dim(), rng))
        .collect();
    let tape = Tape::new();
    let actor = nets.actor.bind(&tape, false);
    let critics = BoundCritics::bind(nets, &tape, false);
    let s = tape.constant(Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row"));
    let head = PolicyHead::new(&nets.actor, &actor, s)?;
    let sq = smoothing_q_on(&critics, &head, s, &noises)?;
    tape.check_finite()?;
    let v = sq.value()[[0, 0]];
    Ok(v)
}
