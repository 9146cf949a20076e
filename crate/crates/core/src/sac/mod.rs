//! Soft actor-critic with a smoothed policy objective.

mod agent;
mod config;
pub mod losses;
mod networks;
pub mod policy;

pub use agent::{soft_update, LossReport, SacAgent};
pub use config::SacConfig;
pub use networks::{AgentNetworks, ACTION_DIM, HIDDEN, STATE_DIM};
pub use policy::{select_action, smoothing_q, ActionSample};
