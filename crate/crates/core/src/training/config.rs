use serde::{Deserialize, Serialize};

use crate::attacks::{Norm, PgdConfig};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::OptimizerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Std,
    Pgd,
    Pgdls,
    Mma,
    Omma,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Std => "std",
            Method::Pgd => "pgd",
            Method::Pgdls => "pgdls",
            Method::Mma => "mma",
            Method::Omma => "omma",
        }
    }

    pub fn is_margin(self) -> bool {
        matches!(self, Method::Mma | Method::Omma)
    }

    pub fn is_fixed_eps(self) -> bool {
        matches!(self, Method::Pgd | Method::Pgdls)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_batch() -> usize {
    50
}
fn default_attack_steps() -> usize {
    10
}
fn default_bisection() -> usize {
    crate::attacks::TRAIN_BISECTION_STEPS
}
fn default_val_fraction() -> f64 {
    0.1
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub norm: Norm,
    /// Fixed attack radius for PGD and PGDLS.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Hinge threshold for MMA and OMMA.
    #[serde(default)]
    pub d_max: Option<f64>,
    /// Initial and minimum stored eps; defaults to `0.05 * d_max`.
    #[serde(default)]
    pub eps_min: Option<f64>,
    /// Largest AN-PGD radius; defaults to `1.05 * d_max`.
    #[serde(default)]
    pub eps_max: Option<f64>,
    /// Hidden layer widths; input and output sizes come from the data.
    #[serde(default)]
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerSpec,
    /// Piecewise-constant learning rate: `(epoch, lr)` pairs applied from
    /// that epoch on.
    #[serde(default)]
    pub lr_schedule: Vec<(usize, f64)>,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_attack_steps")]
    pub attack_steps: usize,
    /// Training attack loss; CE for PGD-style training, SLM for MMA.
    #[serde(default)]
    pub attack_loss: Option<LossKind>,
    #[serde(default = "yes")]
    pub attack_rand_init: bool,
    #[serde(default = "default_bisection")]
    pub bisection_steps: usize,
    /// PGDLS ramp length in epochs; defaults to half of `epochs`.
    #[serde(default)]
    pub ramp_epochs: Option<usize>,
    /// Leading fraction of the training data held out for margin
    /// monitoring and checkpoint selection (MMA only).
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    /// Choose the epoch with the largest mean validation margin (MMA).
    #[serde(default = "yes")]
    pub select_checkpoint: bool,
    /// Record validation margins every epoch for any method.
    #[serde(default)]
    pub monitor_margins: bool,
}

impl TrainConfig {
    pub fn new(method: Method, norm: Norm, optimizer: OptimizerSpec, epochs: usize) -> Self {
        Self {
            method,
            norm,
            eps: None,
            d_max: None,
            eps_min: None,
            eps_max: None,
            hidden: Vec::new(),
            optimizer,
            lr_schedule: Vec::new(),
            epochs,
            batch_size: default_batch(),
            seed: 0,
            attack_steps: default_attack_steps(),
            attack_loss: None,
            attack_rand_init: true,
            bisection_steps: default_bisection(),
            ramp_epochs: None,
            val_fraction: default_val_fraction(),
            select_checkpoint: true,
            monitor_margins: false,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_d_max(mut self, d_max: f64) -> Self {
        self.d_max = Some(d_max);
        self
    }

    pub fn with_hidden(mut self, hidden: &[usize]) -> Self {
        self.hidden = hidden.to_vec();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    pub fn eps_min(&self) -> f64 {
        self.eps_min
            .unwrap_or_else(|| 0.05 * self.d_max.unwrap_or(0.0))
    }

    pub fn eps_max(&self) -> f64 {
        self.eps_max
            .unwrap_or_else(|| 1.05 * self.d_max.unwrap_or(0.0))
    }

    pub fn ramp(&self) -> usize {
        self.ramp_epochs.unwrap_or(self.epochs / 2).max(1)
    }

    pub fn attack_loss(&self) -> LossKind {
        self.attack_loss.unwrap_or(if self.method.is_margin() {
            LossKind::Slm
        } else {
            LossKind::Ce
        })
    }

    pub fn attack_config(&self) -> PgdConfig {
        let mut c = PgdConfig::new(self.attack_steps, self.attack_loss());
        c.rand_init = self.attack_rand_init;
        c
    }

    /// Radius of the training attack at `epoch` for fixed-eps methods.
    pub fn eps_at(&self, epoch: usize) -> f64 {
        let eps = self.eps.unwrap_or(0.0);
        match self.method {
            Method::Pgdls => eps * (epoch as f64 / self.ramp() as f64).min(1.0),
            _ => eps,
        }
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        self.lr_schedule
            .iter()
            .filter(|(e, _)| *e <= epoch)
            .last()
            .map_or(self.optimizer.lr(), |(_, lr)| *lr)
    }

    /// Check the invariants; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: &str| Err(Error::argument(format!("{field}: {msg}")));
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive");
        }
        if self.attack_steps == 0 {
            return bad("attack_steps", "must be positive");
        }
        if self.bisection_steps == 0 {
            return bad("bisection_steps", "must be positive");
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return bad("hidden", "layer widths must be positive");
        }
        self.optimizer.validate()?;
        if self.method.is_fixed_eps() {
            match self.eps {
                None => return bad("eps", "required for pgd and pgdls"),
                Some(e) if !(e >= 0.0) || !e.is_finite() => return bad("eps", "must be finite and >= 0"),
                _ => {}
            }
        }
        if self.method.is_margin() {
            match self.d_max {
                None => return bad("d_max", "required for mma and omma"),
                Some(d) if !(d > 0.0) || !d.is_finite() => return bad("d_max", "must be positive"),
                _ => {}
            }
            let (lo, hi) = (self.eps_min(), self.eps_max());
            if !(lo > 0.0) {
                return bad("eps_min", "must be positive");
            }
            if !(hi >= lo) {
                return bad("eps_max", "must be >= eps_min");
            }
            if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
                return bad("val_fraction", "must lie in (0, 1)");
            }
        }
        for (e, lr) in &self.lr_schedule {
            if !(*lr > 0.0) {
                return bad("lr_schedule", &format!("learning rate at epoch {e} must be positive"));
            }
        }
        Ok(())
    }
}
