//! Operator-learning architectures: MLP building blocks, the six model
//! kinds, initialization, the DeepONet-in-HyperDeepONet embedding, and
//! parameter checkpointing.

pub mod checkpoint;
pub mod embed;
pub mod mlp;
pub mod operator;

pub use checkpoint::{load_params, save_params};
pub use embed::embed_deeponet_as_hyper;
pub use mlp::{count_params, mlp_forward, MlpParams, MlpSpec};
pub use operator::{
    phi_map, Block, ChunkConfig, ModelKind, OperatorModel, SampleGroup, DEFAULT_CHUNK_LATENT_DIM,
};

use crate::diffcore::DiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model construction: {0}")]
    Construction(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("checkpoint format: {0}")]
    Format(String),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
