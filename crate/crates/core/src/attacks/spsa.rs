//! Gradient-free attack: SPSA gradient estimates driving Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::budget::{clamp_to_box, project, PerturbationBudget};
use super::pgd::AttackResult;
use crate::classifier::Classifier;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::tensor::add;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpsaConfig {
    pub iters: usize,
    /// Probe radius for the finite-difference estimate.
    pub perturb_size: f64,
    /// Adam learning rate.
    pub lr: f64,
    /// Function evaluations per gradient estimate (antithetic pairs x 2).
    pub samples: usize,
    /// Early exit once the minimized objective `-LM` falls to this value.
    pub stop_threshold: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            iters: 100,
            perturb_size: 0.01,
            lr: 0.01,
            samples: 2048,
            stop_threshold: -5.0,
        }
    }
}

/// SPSA attack. The objective minimized is the unclipped margin `-LM`; the
/// reported `final_loss` is the CW loss at the returned perturbation.
pub fn spsa_attack<C: Classifier + ?Sized>(
    model: &C,
    x: &[f64],
    y: usize,
    budget: &PerturbationBudget,
    cfg: &SpsaConfig,
    seed: u64,
) -> Result<AttackResult> {
    if cfg.samples == 0 || cfg.samples % 2 != 0 {
        return Err(Error::argument(format!(
            "spsa samples must be even and positive, got {}",
            cfg.samples
        )));
    }
    let dim = x.len();
    let objective = |d: &[f64]| -> Result<f64> {
        let mut p = d.to_vec();
        clamp_to_box(x, &mut p, budget.bounds);
        Ok(-model.loss(LossKind::Lm, &add(x, &p), y)?)
    };
    let mut rng = seed::rng(seed);
    let mut delta = vec![0.0; dim];
    let (mut m, mut v) = (vec![0.0; dim], vec![0.0; dim]);
    let (b1, b2, eps_hat) = (0.9_f64, 0.999_f64, 1e-8);
    let mut best = delta.clone();
    let mut best_obj = objective(&delta)?;
    let pairs = cfg.samples / 2;
    let c = cfg.perturb_size;
    if budget.eps > 0.0 {
        for it in 0..cfg.iters {
            let cur = objective(&delta)?;
            if !cur.is_finite() {
                return Err(Error::Numeric {
                    context: "spsa objective",
                    iterate: Some(it),
                });
            }
            if cur < best_obj {
                best_obj = cur;
                best.clone_from(&delta);
            }
            if cur <= cfg.stop_threshold {
                break;
            }
            let mut grad = vec![0.0; dim];
            let mut probe = vec![0.0; dim];
            for _ in 0..pairs {
                let dir: Vec<f64> = (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                for ((p, d), s) in probe.iter_mut().zip(&delta).zip(&dir) {
                    *p = d + c * s;
                }
                let up = objective(&probe)?;
                for ((p, d), s) in probe.iter_mut().zip(&delta).zip(&dir) {
                    *p = d - c * s;
                }
                let down = objective(&probe)?;
                let scale = (up - down) / (2.0 * c);
                for (g, s) in grad.iter_mut().zip(&dir) {
                    *g += scale * s;
                }
            }
            let t = (it + 1) as i32;
            let moved: Vec<f64> = (0..dim)
                .map(|i| {
                    let g = grad[i] / pairs as f64;
                    m[i] = b1 * m[i] + (1.0 - b1) * g;
                    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
                    let mh = m[i] / (1.0 - b1.powi(t));
                    let vh = v[i] / (1.0 - b2.powi(t));
                    delta[i] - cfg.lr * mh / (vh.sqrt() + eps_hat)
                })
                .collect();
            delta = project(x, &moved, budget);
        }
        let last = objective(&delta)?;
        if last < best_obj {
            best = delta;
        }
    }
    let probe = add(x, &best);
    Ok(AttackResult {
        success: model.predict(&probe) != y,
        final_loss: model.loss(LossKind::Cw, &probe, y)?,
        delta: best,
        restart: 0,
    })
}
