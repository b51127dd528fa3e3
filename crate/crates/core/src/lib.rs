//! Max-margin adversarial training for small fully connected ReLU
//! classifiers, with PGD-family attacks, brute-force margin oracles and a
//! whitebox-plus-transfer robustness evaluation protocol.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod attacks;
pub mod classifier;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod losses;
pub mod margin;
pub mod numerics;
pub mod seed;
pub mod theory;
pub mod training;

pub use classifier::{Classifier, LossEval};
pub use error::{Error, Result};
pub use losses::LossKind;
pub use numerics::{DenseModel, DenseTensor};
