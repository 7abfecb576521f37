//! From-scratch recurrent forecaster.

pub mod cell;
pub mod checkpoint;
pub mod network;
pub mod optim;
pub mod train;

pub use cell::{gru_cell_forward, lstm_cell_forward, CellKind, CellParams, CellWeights, Gate, GruParams, LstmParams};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use network::{compute_gradients, model_forward, Gradients, ModelConfig, Network, TensorInfo};
pub use optim::{adam_step, clip_global_norm, AdamConfig, AdamState};
pub use train::{predict, predict_windows, train, TrainConfig, TrainedModel};
