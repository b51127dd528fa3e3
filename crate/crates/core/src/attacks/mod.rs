//! Norm-constrained attacks: PGD with restarts, the bisection zero-crossing
//! search, adaptive-norm PGD and SPSA.

pub mod anpgd;
pub mod bisection;
pub mod budget;
pub mod pgd;
pub mod spsa;
pub mod transcript;

pub use anpgd::{an_pgd, AnPgdConfig, AnPgdResult};
pub use bisection::{bisect, bisection_zero_crossing, Crossing, TRAIN_BISECTION_STEPS};
pub use budget::{project, random_init, Norm, PerturbationBudget};
pub use pgd::{pgd_attack, pgd_restarts, pgd_single, AttackResult, PgdConfig};
pub use spsa::{spsa_attack, SpsaConfig};
pub use transcript::{write_transcript, TranscriptRow};
