//! Dense tensors, the fully connected ReLU classifier with exact
//! backpropagation, optimizers, checkpoints and a finite-difference oracle.

pub mod checkpoint;
pub mod fd;
pub mod model;
pub mod optim;
pub mod tensor;

pub use fd::{finite_diff_grad, finite_diff_slice};
pub use model::{DenseModel, Layer, LayerGrad, ParamGrads, Trace};
pub use optim::{OptimizerSpec, OptimizerState};
pub use tensor::DenseTensor;
