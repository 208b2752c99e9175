//! Dense-tensor layers with analytic gradients, and the inception model built from them.

pub mod activation;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod model;
pub mod pool;
mod tensor;

use std::path::PathBuf;

use thiserror::Error;

pub use activation::{relu, relu_backward};
pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, batchnorm_infer, batchnorm_train, BatchNormState, BatchStats, BnCache,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use conv::{conv1d_backward, conv1d_forward, ConvCache, ConvGrads, ConvSpec};
pub use dense::{dense_backward, dense_forward, dense_softmax, softmax, softmax_backward};
pub use model::{
    batch_tensor, model_backward, model_forward, Architecture, ForwardCache, Gradients, ModelOutput, ModelParams,
    PathParams,
};
pub use pool::{global_avg_pool, global_avg_pool_backward, maxpool, maxpool_backward, maxpool_with, PoolCache};
pub use tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch norm needs at least two values per channel in training mode, got {count}")]
    DegenerateBatch { count: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
