//! Trainers: standard, PGD, PGD with a linear eps ramp, and max-margin
//! adversarial training, plus the per-example eps store and ensembles.

mod config;
mod ensemble;
mod grads;
mod mma;
mod store;
mod trainer;

pub use config::{Method, TrainConfig};
pub use ensemble::{ensemble_predict, Ensemble};
pub use grads::{weighted_ce_grads, WeightedExample};
pub use mma::{mma_minibatch_loss, MmaBatchStats, MmaVariant};
pub use store::EpsilonStore;
pub use trainer::{
    train, train_from, train_mma, train_pgd, train_pgdls, train_standard, EpochMetrics,
    MarginTraceRow, TrainOutcome,
};
