use serde::Serialize;

use crate::attacks::{an_pgd, AnPgdConfig, PerturbationBudget, PgdConfig};
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::seed;

/// Approximate input-space margin of one example.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginEstimate {
    /// Length of the shortest successful perturbation found, in the budget
    /// norm. Zero for misclassified inputs.
    pub value: f64,
    /// Whether a successful perturbation was found within `eps_max`.
    pub successful: bool,
    /// Unit direction of the perturbation (zeros when misclassified).
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginConfig {
    pub attack: AnPgdConfig,
    pub eps_init: f64,
    pub eps_max: f64,
    /// Number of adaptive-norm rounds. Before any success the PGD radius
    /// doubles each round; afterwards it is bisected between the largest
    /// radius at which PGD failed and the smallest magnitude found, starting
    /// from `shrink` times that magnitude.
    pub rounds: usize,
    pub shrink: f64,
    /// PGD losses tried in every round, each with its own restarts; empty
    /// means `attack.pgd.loss` alone.
    pub pgd_losses: Vec<LossKind>,
}

impl MarginConfig {
    /// Evaluation-time defaults: LM zero crossing; 40-step PGD on SLM and
    /// on LM, 4 restarts each, over 8 rounds.
    pub fn new(eps_init: f64, eps_max: f64) -> Self {
        let mut pgd = PgdConfig::new(40, LossKind::Slm);
        pgd.restarts = 4;
        let mut attack = AnPgdConfig::new(pgd, LossKind::Lm);
        attack.bisection_steps = 20;
        Self {
            attack,
            eps_init,
            eps_max,
            rounds: 8,
            shrink: 0.9,
            pgd_losses: vec![LossKind::Slm, LossKind::Lm],
        }
    }
}

/// Margin estimate via adaptive-norm PGD. Misclassified inputs have margin
/// zero; a degenerate attack direction is reported as `(eps_max, false)`.
pub fn estimate_margin<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    cfg: &MarginConfig,
    seed: u64,
) -> Result<MarginEstimate> {
    if model.predict(x) != y {
        return Ok(MarginEstimate {
            value: 0.0,
            successful: true,
            direction: vec![0.0; x.len()],
        });
    }
    let mut best: Option<MarginEstimate> = None;
    let mut eps_init = cfg.eps_init.min(cfg.eps_max);
    // Largest radius at which PGD itself found nothing.
    let mut lo = 0.0f64;
    let losses = if cfg.pgd_losses.is_empty() {
        vec![cfg.attack.pgd.loss]
    } else {
        cfg.pgd_losses.clone()
    };
    for round in 0..cfg.rounds.max(1) {
        let mut inside = false;
        for (li, &loss) in losses.iter().enumerate() {
            let s = seed::derive(seed, &[seed::stream::MARGIN, round as u64, li as u64]);
            let mut attack = cfg.attack.clone();
            attack.pgd.loss = loss;
            match an_pgd(model, x, y, budget, eps_init, cfg.eps_max, &attack, s) {
                Ok(r) if r.successful => {
                    inside |= r.magnitude <= eps_init;
                    if best.as_ref().map_or(true, |b| !b.successful || r.magnitude < b.value) {
                        best = Some(MarginEstimate {
                            value: r.magnitude,
                            successful: true,
                            direction: r.direction,
                        });
                    }
                }
                Ok(r) => {
                    if best.is_none() {
                        best = Some(MarginEstimate {
                            value: cfg.eps_max,
                            successful: false,
                            direction: r.direction,
                        });
                    }
                }
                Err(Error::DegenerateDirection) => {}
                Err(e) => return Err(e),
            }
        }
        if !inside {
            lo = lo.max(eps_init);
        }
        // Bisect the PGD radius between the largest failing radius and the
        // best magnitude so far; grow it while nothing has succeeded.
        eps_init = match &best {
            Some(b) if b.successful && lo > 0.0 && lo < b.value => 0.5 * (lo + b.value),
            Some(b) if b.successful => (cfg.shrink * b.value).max(1e-9),
            _ if eps_init >= cfg.eps_max => break,
            _ => (2.0 * eps_init).min(cfg.eps_max),
        };
    }
    Ok(best.unwrap_or_else(|| MarginEstimate {
        value: cfg.eps_max,
        successful: false,
        direction: vec![0.0; x.len()],
    }))
}
