use serde::{Deserialize, Serialize};

use super::budget::{project, random_init, Norm, PerturbationBudget};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::tensor::{add, l2_norm};
use crate::seed;

/// Projected gradient ascent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgdConfig {
    pub steps: usize,
    /// Absolute step size; `None` uses `2.5 * eps / steps`.
    #[serde(default)]
    pub step_size: Option<f64>,
    pub loss: LossKind,
    #[serde(default = "yes")]
    pub rand_init: bool,
    #[serde(default = "one")]
    pub restarts: usize,
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}

impl PgdConfig {
    pub fn new(steps: usize, loss: LossKind) -> Self {
        Self {
            steps,
            step_size: None,
            loss,
            rand_init: true,
            restarts: 1,
        }
    }

    pub fn step_size_for(&self, eps: f64) -> f64 {
        self.step_size
            .unwrap_or(2.5 * eps / self.steps.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::argument("pgd steps must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::argument("pgd restarts must be positive"));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0) {
                return Err(Error::argument("pgd step size must be positive"));
            }
        }
        Ok(())
    }
}

/// Outcome of one attack: the perturbation, whether `x + delta` is
/// misclassified, and the attack loss there.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    pub delta: Vec<f64>,
    pub success: bool,
    pub final_loss: f64,
    pub restart: usize,
}

impl AttackResult {
    fn beats(&self, other: &AttackResult) -> bool {
        (self.success && !other.success)
            || (self.success == other.success && self.final_loss > other.final_loss)
    }
}

fn ascent_direction(norm: Norm, g: &[f64]) -> Vec<f64> {
    match norm {
        Norm::Linf => g
            .iter()
            .map(|&v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 })
            .collect(),
        Norm::L2 => {
            let n = l2_norm(g);
            if n > 0.0 {
                g.iter().map(|v| v / n).collect()
            } else {
                vec![0.0; g.len()]
            }
        }
    }
}

/// One PGD run from a seeded start. The returned iterate is the best seen,
/// preferring successful iterates and then higher loss.
pub fn pgd_single<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    cfg: &PgdConfig,
    seed: u64,
) -> Result<AttackResult> {
    let dim = x.len();
    let mut delta = if cfg.rand_init && budget.eps > 0.0 {
        project(x, &random_init(budget, dim, seed), budget)
    } else {
        vec![0.0; dim]
    };
    let step = cfg.step_size_for(budget.eps);
    let mut best: Option<AttackResult> = None;
    for t in 0..=cfg.steps {
        let probe = add(x, &delta);
        let e = model.evaluate(cfg.loss, &probe, y).map_err(|err| match err {
            Error::Numeric { context, .. } => Error::Numeric {
                context,
                iterate: Some(t),
            },
            other => other,
        })?;
        if !e.loss.is_finite() {
            return Err(Error::Numeric {
                context: "pgd loss",
                iterate: Some(t),
            });
        }
        let cand = AttackResult {
            delta: delta.clone(),
            success: e.predicted != y,
            final_loss: e.loss,
            restart: 0,
        };
        if best.as_ref().map_or(true, |b| cand.beats(b)) {
            best = Some(cand);
        }
        if t == cfg.steps || budget.eps == 0.0 {
            break;
        }
        let dir = ascent_direction(budget.norm, &e.grad);
        let moved: Vec<f64> = delta.iter().zip(&dir).map(|(d, g)| d + step * g).collect();
        delta = project(x, &moved, budget);
    }
    Ok(best.expect("at least one iterate evaluated"))
}

/// Every restart of a PGD attack, restart `r` seeded by `derive(seed, [r])`.
pub fn pgd_restarts<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    cfg: &PgdConfig,
    seed: u64,
) -> Result<Vec<AttackResult>> {
    cfg.validate()?;
    (0..cfg.restarts)
        .map(|r| {
            let mut res = pgd_single(model, x, y, budget, cfg, seed::derive(seed, &[r as u64]))?;
            res.restart = r;
            Ok(res)
        })
        .collect()
}

/// PGD with restarts, reduced to the strongest restart.
pub fn pgd_attack<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    cfg: &PgdConfig,
    seed: u64,
) -> Result<AttackResult> {
    let runs = pgd_restarts(model, x, y, budget, cfg, seed)?;
    let mut it = runs.into_iter();
    let mut best = it.next().expect("restarts >= 1");
    for r in it {
        if r.beats(&best) {
            best = r;
        }
    }
    Ok(best)
}
