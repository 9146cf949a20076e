//! Hyper-parameter optimization as a Markov decision process, solved with
//! soft actor-critic.
//!
//! An LSTM environment turns each proposed hyper-parameter vector into the
//! next state, the reward is the reciprocal of the validation loss above a
//! baseline, replay data is augmented by hierarchical mixing, and the policy
//! gradient averages the twin-critic minimum over several reparameterized
//! actions.

pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod objectives;
pub mod replay;
pub mod sac;

pub use error::{Error, Result};
