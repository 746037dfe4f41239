//! Minimal neural network stack: tensors, the layer types of the classifier,
//! softmax with cross-entropy, Adam, and a finite-difference gradient check.

mod adam;
mod gemm;
mod gradcheck;
mod layers;
mod loss;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{
    gradient_check, CheckMode, Differentiable, GradCheckConfig, GradCheckReport, ParamCheck,
};
pub use layers::{
    relu, BatchNorm1d, BatchNormParams, Conv1d, Conv1dParams, Dense, Dropout, DropoutConfig, Phase,
    Relu,
};
pub use loss::{cross_entropy_loss, one_hot, softmax, PROB_FLOOR};
pub use tensor::Tensor;
