//! Parameter gradient of the input-space margin via the shortest
//! successful perturbation.

use crate::attacks::{Norm, PerturbationBudget};
use crate::error::{Error, Result};
use crate::losses::{loss_and_grad, LossKind};
use crate::numerics::tensor::{add, dot, l2_norm};
use crate::numerics::{DenseModel, ParamGrads};

use super::estimate::{estimate_margin, MarginConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MarginGradient {
    /// `<d||delta||/d delta, g> / ||g||^2` with `g` the input gradient of
    /// the loss at `x + delta`.
    pub c: f64,
    pub delta: Vec<f64>,
    /// Gradient of the loss with respect to the parameters at `x + delta`.
    pub loss_grad: ParamGrads,
    /// Margin gradient `-c * loss_grad`.
    pub grad: ParamGrads,
}

/// Margin gradient at a known shortest successful perturbation `delta`
/// for the L2 norm. The margin is the distance to the level set
/// `L = 0`; moving the parameters with the loss held at that point shifts
/// the level set and the margin changes by `-c` times the loss change.
pub fn margin_gradient_at(
    model: &DenseModel,
    x: &[f64],
    y: usize,
    delta: &[f64],
    loss: LossKind,
) -> Result<MarginGradient> {
    let len = l2_norm(delta);
    if !(len > 0.0) {
        return Err(Error::argument("margin gradient needs a non-zero perturbation"));
    }
    let t = model.trace(&add(x, delta));
    let (_, up) = loss_and_grad(loss, t.logits(), y)?;
    let mut loss_grad = ParamGrads::zeros_like(model);
    let g = model
        .pullback(&t, &up, Some(&mut loss_grad), true)
        .expect("input gradient requested");
    let gg = dot(&g, &g);
    if gg.sqrt() < 1e-12 {
        return Err(Error::DegenerateDirection);
    }
    let c = dot(delta, &g) / (len * gg);
    let mut grad = loss_grad.clone();
    grad.scale(-c);
    Ok(MarginGradient {
        c,
        delta: delta.to_vec(),
        loss_grad,
        grad,
    })
}

/// Margin gradient scalar with `delta` located by adaptive-norm PGD and the
/// gradient taken through the SLM loss. Only the L2 norm is smooth enough.
pub fn margin_grad_scalar(
    model: &DenseModel,
    x: &[f64],
    y: usize,
    norm: Norm,
    cfg: &MarginConfig,
    seed: u64,
) -> Result<MarginGradient> {
    if norm != Norm::L2 {
        return Err(Error::Unsupported(format!("margin gradient under the {norm} norm")));
    }
    let budget = PerturbationBudget::new(Norm::L2, cfg.eps_max)?;
    let est = estimate_margin(model, x, y, &budget, cfg, seed)?;
    if !est.successful || est.value == 0.0 {
        return Err(Error::argument(
            "margin gradient needs a correctly classified point with a margin below eps_max",
        ));
    }
    let delta: Vec<f64> = est.direction.iter().map(|u| u * est.value).collect();
    margin_gradient_at(model, x, y, &delta, LossKind::Slm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_scalar_formula() {
        let m = DenseModel::binary_linear(&[3.0, 4.0], 0.0).unwrap();
        let x = [1.0, 1.0];
        // For a linear boundary delta* is -1.4 * w / |w|.
        let delta = [-0.84, -1.12];
        let r = margin_gradient_at(&m, &x, 1, &delta, LossKind::Slm).unwrap();
        // g = -(3,4), <delta/|delta|, g> = 5, |g|^2 = 25.
        assert!((r.c - 0.2).abs() < 1e-12);
        let d = r.grad.flat();
        let l = r.loss_grad.flat();
        for (a, b) in d.iter().zip(&l) {
            assert!((a + 0.2 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn linf_unsupported() {
        let m = DenseModel::binary_linear(&[3.0, 4.0], 0.0).unwrap();
        let cfg = MarginConfig::new(0.5, 3.0);
        assert!(matches!(
            margin_grad_scalar(&m, &[1.0, 1.0], 1, Norm::Linf, &cfg, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn analytic_linear_margin_gradient() {
        // d = (w.x + b) / |w| with w = w1 - w0 for the two-logit model.
        let m = DenseModel::binary_linear(&[3.0, 4.0], 0.5).unwrap();
        let x = [1.0, 1.0];
        let mut cfg = MarginConfig::new(0.5, 4.0);
        cfg.attack.pgd.rand_init = false;
        cfg.attack.bisection_steps = 40;
        let r = margin_grad_scalar(&m, &x, 1, Norm::L2, &cfg, 3).unwrap();
        let g = r.grad.flat();
        // Layout: w0 (2), w1 (2), b0, b1. Gradient w.r.t. w1 is
        // x/|w| - (w.x+b) w/|w|^3.
        let s = 7.5;
        let expect_w1 = [1.0 / 5.0 - s * 3.0 / 125.0, 1.0 / 5.0 - s * 4.0 / 125.0];
        assert!((g[2] - expect_w1[0]).abs() < 1e-3, "{g:?}");
        assert!((g[3] - expect_w1[1]).abs() < 1e-3, "{g:?}");
        assert!((g[5] - 0.2).abs() < 1e-3);
        assert!((g[4] + 0.2).abs() < 1e-3);
    }
}
