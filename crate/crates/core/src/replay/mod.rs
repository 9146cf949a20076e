//! Replay storage and mixture-regularized augmentation.

mod buffer;
pub mod mix;

pub use buffer::{ReplayBuffer, Transition};
pub use mix::{augment_hierarchical, mix_closed_form, mix_scalar, mix_weights, Augmentation, MixConfig};
