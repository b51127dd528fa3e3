//! Robustness evaluation: repeated-restart whitebox PGD, transfer pooling
//! across a model zoo, accuracy metrics and report emission.

mod metrics;
mod protocol;
mod report;
mod suite;

pub use metrics::compute_metrics;
pub use protocol::{combined_eval, ensemble_eval, whitebox_eval, EvalOutput, ZooEntry};
pub use report::{EvalReport, ModelReport};
pub use suite::{AttackSpec, AttackSuite};
