use serde::{Deserialize, Serialize};

use crate::attacks::{Norm, PgdConfig};
use crate::error::{Error, Result};
use crate::losses::LossKind;

fn default_steps() -> usize {
    100
}
fn yes() -> bool {
    true
}

/// One family of restarts in an attack suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub loss: LossKind,
    #[serde(default = "default_steps")]
    pub steps: usize,
    pub restarts: usize,
    /// Step size as a multiple of eps. Defaults to `2.5 / steps` for Linf
    /// and `0.25` for L2, scaled linearly with eps.
    #[serde(default)]
    pub step_scale: Option<f64>,
    #[serde(default = "yes")]
    pub rand_init: bool,
}

impl AttackSpec {
    pub fn new(loss: LossKind, steps: usize, restarts: usize) -> Self {
        Self {
            loss,
            steps,
            restarts,
            step_scale: None,
            rand_init: true,
        }
    }

    pub fn step_scale_for(&self, norm: Norm) -> f64 {
        self.step_scale.unwrap_or(match norm {
            Norm::Linf => 2.5 / self.steps as f64,
            Norm::L2 => 0.25,
        })
    }

    /// PGD settings for one restart at radius `eps`.
    pub fn pgd_config(&self, norm: Norm, eps: f64) -> PgdConfig {
        let mut c = PgdConfig::new(self.steps, self.loss);
        c.rand_init = self.rand_init;
        if eps > 0.0 {
            c.step_size = Some(self.step_scale_for(norm) * eps);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSuite {
    pub attacks: Vec<AttackSpec>,
}

impl AttackSuite {
    /// `n` restarts of 100-step PGD, half on CE and half on CW.
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::argument(format!("restart count must be even and positive, got {n}")));
        }
        Ok(Self {
            attacks: vec![
                AttackSpec::new(LossKind::Ce, 100, n / 2),
                AttackSpec::new(LossKind::Cw, 100, n / 2),
            ],
        })
    }

    pub fn total_restarts(&self) -> usize {
        self.attacks.iter().map(|a| a.restarts).sum()
    }

    /// Every restart as `(attack index, restart within attack)`.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        self.attacks
            .iter()
            .enumerate()
            .flat_map(|(a, s)| (0..s.restarts).map(move |r| (a, r)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.attacks.is_empty() {
            return Err(Error::argument("attack suite is empty"));
        }
        for (i, a) in self.attacks.iter().enumerate() {
            if a.steps == 0 || a.restarts == 0 {
                return Err(Error::argument(format!("attacks[{i}]: steps and restarts must be positive")));
            }
            if let Some(s) = a.step_scale {
                if !(s > 0.0) {
                    return Err(Error::argument(format!("attacks[{i}]: step_scale must be positive")));
                }
            }
        }
        Ok(())
    }
}
