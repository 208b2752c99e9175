//! Loss, optimizer, learning-rate schedule and the mini-batch training loop.

mod adam;
mod fit;
mod loss;
mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::NnError;

pub use adam::{adam_step, Adam, AdamState, Optimizer};
pub use fit::{fit, fit_with, EpochRecord, StopReason, TrainLog};
pub use loss::{data_loss, loss, loss_grad, PROB_CLAMP};
pub use schedule::{lr_schedule, EarlyStopping, Plateau};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("empty training set")]
    EmptyDataset,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("training loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr_init: f64,
    pub lr_min: f64,
    pub lr_factor: f64,
    pub plateau_patience: usize,
    pub stop_patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub lambda_l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_init: 1e-3,
            lr_min: 1e-5,
            lr_factor: 0.1,
            plateau_patience: 5,
            stop_patience: 10,
            max_epochs: 200,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-7,
            lambda_l2: 0.001,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if !(self.lr_min > 0.0 && self.lr_min <= self.lr_init) {
            return bad("need 0 < lr_min <= lr_init");
        }
        if !(self.lr_factor > 0.0 && self.lr_factor < 1.0) {
            return bad("need 0 < lr_factor < 1");
        }
        if self.plateau_patience == 0 || self.stop_patience == 0 {
            return bad("patiences must be at least 1");
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("need 0 <= beta1, beta2 < 1");
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 || self.lambda_l2.is_nan() || self.lambda_l2 < 0.0 {
            return bad("need adam_epsilon > 0 and lambda_l2 >= 0");
        }
        Ok(())
    }
}
