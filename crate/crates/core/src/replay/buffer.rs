use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One (state, action, next-state, reward) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub next_state: Vec<f64>,
    pub reward: f64,
}

impl Transition {
    pub fn is_finite(&self) -> bool {
        self.state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .all(|v| v.is_finite())
            && self.reward.is_finite()
    }
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten
/// once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    storage: Vec<Transition>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize, seed: u64) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            state_dim,
            action_dim,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) -> Result<()> {
        if t.state.len() != self.state_dim {
            return Err(Error::dims("transition state", self.state_dim, t.state.len()));
        }
        if t.next_state.len() != self.state_dim {
            return Err(Error::dims(
                "transition next_state",
                self.state_dim,
                t.next_state.len(),
            ));
        }
        if t.action.len() != self.action_dim {
            return Err(Error::dims("transition action", self.action_dim, t.action.len()));
        }
        if !t.is_finite() {
            return Err(Error::NonFinite {
                primitive: "replay push",
            });
        }
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Contents from oldest to newest.
    pub fn iter_ordered(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.storage.get(index)
    }

    /// Indices of `k` distinct entries drawn uniformly with the buffer's own
    /// generator.
    pub fn sample_indices(&mut self, k: usize) -> Result<Vec<usize>> {
        if k > self.storage.len() {
            return Err(Error::InsufficientSamples {
                requested: k,
                available: self.storage.len(),
            });
        }
        Ok(sample(&mut self.rng, self.storage.len(), k).into_vec())
    }

    /// `k` uniform draws without replacement.
    pub fn sample_batch(&mut self, k: usize) -> Result<Vec<Transition>> {
        let idx = self.sample_indices(k)?;
        Ok(idx.into_iter().map(|i| self.storage[i].clone()).collect())
    }
}
