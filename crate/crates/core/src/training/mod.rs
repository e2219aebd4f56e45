//! Collocation residual training with Adam.

mod adam;
mod collocation;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use collocation::{build_collocation, CollocationGrid, CollocationMode};
pub use loss::{record_loss, residual_loss, LossGraph};
pub use trainer::{train, train_with, Divergence, TrainConfig, TrainReport};
