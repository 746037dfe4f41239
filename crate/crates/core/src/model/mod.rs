//! The raw-waveform frame classifier: architecture, training, evaluation
//! and checkpoints.
//!
//! Classes `0..N` are the grid directions in order and class `N` is
//! silence.

mod checkpoint;
mod config;
mod data;
mod eval;
mod net;
mod train;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, TrainingMeta,
    FORMAT_VERSION, MAGIC,
};
pub use config::{ConvSpec, ModelConfig};
pub use data::FrameSet;
pub use eval::{evaluate, predict_set, EvalReport};
pub use net::{ConvBn, Model, ResidualBlock};
pub use train::{train, EpochMetrics, TrainConfig, TrainHistory};
