//! Adaptive-norm PGD: a PGD run at an initial radius, followed by a
//! bisection along the resulting direction for the loss zero crossing.

use super::bisection::bisect;
use super::budget::{clamp_to_box, PerturbationBudget};
use super::pgd::{pgd_attack, PgdConfig};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::tensor::add;

#[derive(Debug, Clone, PartialEq)]
pub struct AnPgdConfig {
    pub pgd: PgdConfig,
    /// Loss whose zero crossing along the ray is located. Training uses
    /// SLM; margin measurement uses LM.
    pub ray_loss: LossKind,
    pub bisection_steps: usize,
}

impl AnPgdConfig {
    pub fn new(pgd: PgdConfig, ray_loss: LossKind) -> Self {
        Self {
            pgd,
            ray_loss,
            bisection_steps: super::bisection::TRAIN_BISECTION_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnPgdResult {
    /// Approximate shortest successful perturbation.
    pub delta: Vec<f64>,
    /// Its length in the budget norm.
    pub magnitude: f64,
    /// A point with non-negative ray loss was located within `eps_max`.
    pub successful: bool,
    /// Unit direction of the initial PGD perturbation.
    pub direction: Vec<f64>,
    /// Ray loss at the returned magnitude.
    pub ray_loss: f64,
    /// Loss variation across the final bisection bracket.
    pub bracket_spread: f64,
}

/// `budget.eps` is ignored; the norm and box of `budget` are used with the
/// radii `eps_init` and `eps_max`.
pub fn an_pgd<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    eps_init: f64,
    eps_max: f64,
    cfg: &AnPgdConfig,
    seed: u64,
) -> Result<AnPgdResult> {
    if !(eps_init > 0.0 && eps_init <= eps_max) {
        return Err(Error::argument(format!(
            "need 0 < eps_init <= eps_max, got {eps_init} and {eps_max}"
        )));
    }
    let init_budget = budget.with_eps(eps_init)?;
    let first = pgd_attack(model, x, y, &init_budget, &cfg.pgd, seed)?;
    let n1 = budget.norm.measure(&first.delta);
    if !(n1 > 1e-12) {
        return Err(Error::DegenerateDirection);
    }
    let unit: Vec<f64> = first.delta.iter().map(|d| d / n1).collect();
    let along = |eta: f64| -> Vec<f64> {
        let mut d: Vec<f64> = unit.iter().map(|u| u * eta).collect();
        clamp_to_box(x, &mut d, budget.bounds);
        d
    };
    let mut eval_err = None;
    let mut ray = |eta: f64| -> f64 {
        match model.loss(cfg.ray_loss, &add(x, &along(eta)), y) {
            Ok(v) => v,
            Err(e) => {
                eval_err.get_or_insert(e);
                f64::NAN
            }
        }
    };

    let still_correct = model.predict(&add(x, &first.delta)) == y;
    let (lo, hi) = if still_correct {
        (n1.min(eps_max), eps_max)
    } else {
        (0.0, n1)
    };
    let crossing = bisect(&mut ray, lo, hi, cfg.bisection_steps)?;
    let spread = if crossing.bracketed {
        (ray(crossing.hi) - ray(crossing.lo)).abs()
    } else {
        0.0
    };
    let at = ray(crossing.point);
    if let Some(e) = eval_err {
        return Err(e);
    }
    let delta = along(crossing.point);
    Ok(AnPgdResult {
        magnitude: budget.norm.measure(&delta),
        delta,
        successful: crossing.bracketed || at >= 0.0,
        direction: unit,
        ray_loss: at,
        bracket_spread: spread,
    })
}
