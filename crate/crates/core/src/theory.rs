//! Numerical checks of the margin theory on random toy instances: the
//! LM/SLM sandwich, CE/SLM gradient collinearity, the margin gradient,
//! loss descent growing the margin, fixed-eps training as a margin lower
//! bound, and min/max level-set duality.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attacks::Norm;
use crate::classifier::Classifier;
use crate::error::Result;
use crate::exec;
use crate::losses::{ce_slm_ratio, loss_and_grad, loss_value, LossKind};
use crate::margin::{
    eps_star_of_rho, grid_max_loss, level_set_radius, level_set_radius_polished, margin_grad_scalar,
    MarginConfig,
};
use crate::numerics::tensor::{cosine, l2_norm};
use crate::numerics::{DenseModel, Layer, ParamGrads};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    #[serde(default)]
    pub seed: u64,
    /// Random logit vectors per class count for the loss identities.
    #[serde(default = "d_logits")]
    pub logit_samples: usize,
    /// Random models for the gradient identities.
    #[serde(default = "d_logits")]
    pub gradient_samples: usize,
    /// Random toy instances per margin check.
    #[serde(default = "d_instances")]
    pub instances: usize,
    /// Instances that must pass, out of `instances`.
    #[serde(default = "d_required")]
    pub required: usize,
    #[serde(default = "d_grid")]
    pub grid_n: usize,
    /// Finite-difference step for margin gradients.
    #[serde(default = "d_h")]
    pub fd_h: f64,
}

fn d_logits() -> usize {
    1000
}
fn d_instances() -> usize {
    20
}
fn d_required() -> usize {
    19
}
fn d_grid() -> usize {
    256
}
fn d_h() -> f64 {
    1e-5
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            logit_samples: d_logits(),
            gradient_samples: d_logits(),
            instances: d_instances(),
            required: d_required(),
            grid_n: d_grid(),
            fd_h: d_h(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub tolerance: String,
    pub passed: usize,
    pub total: usize,
    pub required: usize,
    /// Worst observed error, in the units of the tolerance.
    pub worst: f64,
    pub ok: bool,
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<28} {} {}/{} (need {}) worst {:.3e} [{}]",
            self.name,
            if self.ok { "PASS" } else { "FAIL" },
            self.passed,
            self.total,
            self.required,
            self.worst,
            self.tolerance
        )
    }
}

fn report(name: &'static str, tolerance: String, results: &[(bool, f64)], required: usize) -> CheckReport {
    let passed = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    CheckReport {
        name,
        tolerance,
        passed,
        total: results.len(),
        required,
        worst,
        ok: passed >= required,
    }
}

fn rng_for(cfg: &TheoryConfig, check: u64, i: usize) -> ChaCha8Rng {
    seed::rng(seed::derive(cfg.seed, &[seed::stream::THEORY, check, i as u64]))
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_logits(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let scale = [0.1, 1.0, 5.0, 20.0][rng.gen_range(0..4)];
    (0..k).map(|_| scale * normal(rng)).collect()
}

/// SLM - log(K-1) <= LM <= SLM on random logits for K in {2, 3, 10}, with
/// exact slack at equal non-label logits, and the SLM margin below the LM
/// margin on random 2D models.
pub fn check_lm_slm_sandwich(cfg: &TheoryConfig) -> Result<CheckReport> {
    let mut results = Vec::new();
    for (ki, &k) in [2usize, 3, 10].iter().enumerate() {
        for i in 0..cfg.logit_samples {
            let mut rng = rng_for(cfg, 10 + ki as u64, i);
            let z = random_logits(&mut rng, k);
            let y = rng.gen_range(0..k);
            let lm = loss_value(LossKind::Lm, &z, y)?;
            let slm = loss_value(LossKind::Slm, &z, y)?;
            let slack = ((k - 1) as f64).ln();
            let viol = (lm - slm).max(slm - slack - lm).max(0.0);
            results.push((viol <= 1e-9, viol));
        }
        let mut z = vec![0.7; k];
        z[0] = 2.0;
        let gap = loss_value(LossKind::Slm, &z, 0)? - loss_value(LossKind::Lm, &z, 0)?;
        let err = (gap - ((k - 1) as f64).ln()).abs();
        results.push((err <= 1e-9, err));
    }
    let n = cfg.instances;
    let margins = exec::try_map_indexed(n, |i| -> Result<(bool, f64)> {
        let mut rng = rng_for(cfg, 13, i);
        let (m, x, y) = relu_instance(&mut rng, 3);
        let spacing = 2.0 * 3.0 / (cfg.grid_n - 1) as f64;
        let lm = level_set_radius(&m, &x, y, LossKind::Lm, 0.0, Norm::L2, 3.0, cfg.grid_n)?;
        let slm = level_set_radius(&m, &x, y, LossKind::Slm, 0.0, Norm::L2, 3.0, cfg.grid_n)?;
        let excess = if lm.is_finite() { (slm - lm).max(0.0) } else { 0.0 };
        Ok((excess <= spacing, excess / spacing))
    })?;
    let mut all = results;
    let required = all.len() + cfg.required.min(n);
    all.extend(margins);
    Ok(report(
        "lm-slm-sandwich",
        "logits 1e-9; margins one grid spacing".into(),
        &all,
        required,
    ))
}

fn max_rel_ratio_err(ce: &[f64], slm: &[f64], r: f64) -> f64 {
    let scale = slm.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ce_scale = ce.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst = 0.0f64;
    for (c, s) in ce.iter().zip(slm) {
        if s.abs() > 1e-6 * scale {
            worst = worst.max((c / s - r).abs());
        } else {
            worst = worst.max((c - r * s).abs() / ce_scale.max(f64::MIN_POSITIVE));
        }
    }
    worst
}

fn random_model(rng: &mut ChaCha8Rng) -> (DenseModel, Vec<f64>, usize) {
    let d = rng.gen_range(1..6);
    let h = rng.gen_range(2..9);
    let k = [2usize, 3, 10][rng.gen_range(0..3)];
    let m = DenseModel::init(&[d, h, k], rng.gen()).expect("valid widths");
    let x: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
    let y = rng.gen_range(0..k);
    (m, x, y)
}

/// grad CE = r * grad SLM in logit, parameter and input space.
pub fn check_ce_slm_collinearity(cfg: &TheoryConfig) -> Result<CheckReport> {
    let results = exec::try_map_indexed(cfg.gradient_samples, |i| -> Result<(bool, f64)> {
        let mut rng = rng_for(cfg, 20, i);
        let (m, x, y) = random_model(&mut rng);
        let t = m.trace(&x);
        let r = ce_slm_ratio(t.logits(), y)?;
        let (_, gce) = loss_and_grad(LossKind::Ce, t.logits(), y)?;
        let (_, gslm) = loss_and_grad(LossKind::Slm, t.logits(), y)?;
        let mut pce = ParamGrads::zeros_like(&m);
        let mut pslm = ParamGrads::zeros_like(&m);
        let ice = m.pullback(&t, &gce, Some(&mut pce), true).expect("input grad");
        let islm = m.pullback(&t, &gslm, Some(&mut pslm), true).expect("input grad");
        let (pce, pslm) = (pce.flat(), pslm.flat());
        let mut worst = 0.0f64;
        for (a, b) in [(&gce, &gslm), (&pce, &pslm), (&ice, &islm)] {
            worst = worst.max(max_rel_ratio_err(a, b, r));
            if l2_norm(b) > 0.0 {
                worst = worst.max((cosine(a, b) - 1.0).abs());
            }
        }
        Ok((worst <= 1e-9, worst))
    })?;
    Ok(report("ce-slm-collinearity", "ratio and cosine 1e-9".into(), &results, results.len()))
}

/// Two-logit linear (logistic) model in 2D with a correctly classified
/// point at margin between 0.2 and 1.5.
fn logistic_instance(rng: &mut ChaCha8Rng) -> (DenseModel, Vec<f64>, usize) {
    loop {
        let w: Vec<f64> = (0..4).map(|_| normal(rng)).collect();
        let b: Vec<f64> = (0..2).map(|_| 0.5 * normal(rng)).collect();
        let m = DenseModel::new(vec![Layer::new(2, 2, w.clone(), b.clone()).expect("shape")]).expect("model");
        let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let y = m.predict(&x);
        let dw = [w[2] - w[0], w[3] - w[1]];
        let n = l2_norm(&dw);
        if n < 0.3 {
            continue;
        }
        let d = (dw[0] * x[0] + dw[1] * x[1] + b[1] - b[0]).abs() / n;
        if (0.2..1.5).contains(&d) {
            return (m, x, y);
        }
    }
}

/// Random two-layer ReLU model in 2D with a correctly classified point
/// whose margin lies in (0.1, 2).
fn relu_instance(rng: &mut ChaCha8Rng, k: usize) -> (DenseModel, Vec<f64>, usize) {
    loop {
        let m = DenseModel::init(&[2, 8, k], rng.gen()).expect("widths");
        let x = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let y = m.predict(&x);
        let lm = loss_value(LossKind::Lm, &m.logits(&x), y).expect("valid label");
        if lm < -0.05 {
            let d = level_set_radius(&m, &x, y, LossKind::Lm, 0.0, Norm::L2, 2.0, 32).expect("2D");
            if d.is_finite() && d > 0.1 {
                return (m, x, y);
            }
        }
    }
}

fn polished_margin(m: &DenseModel, x: &[f64], y: usize, grid_n: usize) -> Result<f64> {
    level_set_radius_polished(m, x, y, LossKind::Lm, 0.0, Norm::L2, 3.0, grid_n, 4)
}

fn margin_cfg() -> MarginConfig {
    let mut c = MarginConfig::new(0.5, 3.0);
    c.attack.pgd.rand_init = false;
    c.attack.bisection_steps = 40;
    c
}

/// The margin gradient `-C dL/dtheta` at delta* against central finite
/// differences of the brute-force margin, relative L2 error.
pub fn check_margin_gradient(cfg: &TheoryConfig) -> Result<CheckReport> {
    let results = exec::try_map_indexed(cfg.instances, |i| -> Result<(bool, f64)> {
        let mut rng = rng_for(cfg, 30, i);
        let (m, x, y) = logistic_instance(&mut rng);
        let g = margin_grad_scalar(&m, &x, y, Norm::L2, &margin_cfg(), i as u64)?;
        let theta = m.params_flat();
        let fd: Vec<f64> = (0..theta.len())
            .map(|p| -> Result<f64> {
                let at = |s: f64| -> Result<f64> {
                    let mut t = theta.clone();
                    t[p] += s * cfg.fd_h;
                    let mut mm = m.clone();
                    mm.set_params_flat(&t)?;
                    polished_margin(&mm, &x, y, cfg.grid_n)
                };
                Ok((at(1.0)? - at(-1.0)?) / (2.0 * cfg.fd_h))
            })
            .collect::<Result<_>>()?;
        let an = g.grad.flat();
        let diff: Vec<f64> = an.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = l2_norm(&diff) / l2_norm(&fd).max(1e-12);
        Ok((rel <= 5e-2, rel))
    })?;
    Ok(report(
        "margin-gradient",
        "relative error 5e-2".into(),
        &results,
        cfg.required.min(cfg.instances),
    ))
}

/// A small parameter step along the margin gradient (gradient descent on
/// the loss at delta*) increases the brute-force margin.
pub fn check_loss_descent_grows_margin(cfg: &TheoryConfig) -> Result<CheckReport> {
    let results = exec::try_map_indexed(cfg.instances, |i| -> Result<(bool, f64)> {
        let mut rng = rng_for(cfg, 40, i);
        let (m, x, y) = logistic_instance(&mut rng);
        let g = margin_grad_scalar(&m, &x, y, Norm::L2, &margin_cfg(), i as u64)?;
        let step = g.grad.flat();
        let scale = 1e-2 / l2_norm(&step).max(1e-12);
        let theta: Vec<f64> = m.params_flat().iter().zip(&step).map(|(t, s)| t + scale * s).collect();
        let mut m1 = m.clone();
        m1.set_params_flat(&theta)?;
        let before = polished_margin(&m, &x, y, cfg.grid_n)?;
        let after = polished_margin(&m1, &x, y, cfg.grid_n)?;
        Ok((after > before, before - after))
    })?;
    Ok(report(
        "loss-descent-grows-margin",
        "oracle margin strictly increases".into(),
        &results,
        cfg.required.min(cfg.instances),
    ))
}

/// Grid tolerance for level-set checks: input-gradient size times spacing.
fn lm_tolerance(m: &DenseModel, x: &[f64], y: usize, radius: f64, grid_n: usize) -> Result<f64> {
    let (_, g) = m.loss_and_input_grad(LossKind::Lm, x, y)?;
    let lip = m
        .layers()
        .iter()
        .map(|l| {
            (0..l.outputs)
                .map(|o| l2_norm(l.row(o)))
                .fold(0.0, f64::max)
                * (l.outputs as f64).sqrt()
        })
        .product::<f64>()
        .min(10.0 * l2_norm(&g).max(1.0));
    Ok(2.0 * lip * 2.0 * radius / (grid_n - 1) as f64)
}

/// One step of plain gradient descent on LM at the grid maximizer of the
/// eps ball, shrunk until it lowers the grid maximum.
fn adversarial_step(m: &DenseModel, x: &[f64], y: usize, eps: f64, grid_n: usize) -> Result<Option<(DenseModel, f64)>> {
    let (rho, dbar) = grid_max_loss(m, x, y, LossKind::Lm, Norm::L2, eps, grid_n)?;
    let xa: Vec<f64> = x.iter().zip(&dbar).map(|(a, b)| a + b).collect();
    let t = m.trace(&xa);
    let (_, up) = loss_and_grad(LossKind::Lm, t.logits(), y)?;
    let mut pg = ParamGrads::zeros_like(m);
    m.pullback(&t, &up, Some(&mut pg), false);
    let g = pg.flat();
    let mut lr = 0.05 / l2_norm(&g).max(1e-12);
    for _ in 0..8 {
        let theta: Vec<f64> = m.params_flat().iter().zip(&g).map(|(p, d)| p - lr * d).collect();
        let mut m1 = m.clone();
        m1.set_params_flat(&theta)?;
        let (rho1, _) = grid_max_loss(&m1, x, y, LossKind::Lm, Norm::L2, eps, grid_n)?;
        if rho1 < rho {
            return Ok(Some((m1, rho)));
        }
        lr *= 0.5;
    }
    Ok(None)
}

/// Fixed-eps adversarial training and the margin. With eps equal to the
/// margin the worst-case loss is zero and the margin does not shrink after
/// a step; with eps below the margin the level-set radius at the
/// pre-step worst-case loss does not shrink.
pub fn check_fixed_eps_lower_bound(cfg: &TheoryConfig) -> Result<CheckReport> {
    let n = cfg.instances;
    let results = exec::try_map_indexed(2 * n, |j| -> Result<(bool, f64)> {
        let case_one = j < n;
        let mut rng = rng_for(cfg, 50 + case_one as u64, j % n);
        let (m, x, y) = relu_instance(&mut rng, 3);
        let radius = 3.0;
        let d0 = level_set_radius(&m, &x, y, LossKind::Lm, 0.0, Norm::L2, radius, cfg.grid_n)?;
        let eps = if case_one { d0 } else { rng.gen_range(0.3..0.8) * d0 };
        let tol = lm_tolerance(&m, &x, y, eps, cfg.grid_n)?;
        let spacing = 2.0 * radius / (cfg.grid_n - 1) as f64;
        let Some((m1, rho)) = adversarial_step(&m, &x, y, eps, cfg.grid_n)? else {
            return Ok((false, f64::INFINITY));
        };
        if case_one {
            let d1 = level_set_radius(&m1, &x, y, LossKind::Lm, 0.0, Norm::L2, radius, cfg.grid_n)?;
            let rho_err = rho.abs() / tol;
            let shrink = (d0 - d1).max(0.0) / spacing;
            Ok((rho_err <= 1.0 && shrink <= 1.0, rho_err.max(shrink)))
        } else {
            let e0 = eps_star_of_rho(&m, &x, y, rho, Norm::L2, radius, cfg.grid_n)?;
            let e1 = eps_star_of_rho(&m1, &x, y, rho, Norm::L2, radius, cfg.grid_n)?;
            let ok_sign = rho <= tol;
            let shrink = (e0 - e1).max(0.0) / spacing;
            let bounded = e0 <= d0 + spacing;
            Ok((ok_sign && bounded && shrink <= 1.0, shrink))
        }
    })?;
    let case_one: Vec<_> = results[..n].to_vec();
    let case_two: Vec<_> = results[n..].to_vec();
    let req = cfg.required.min(n);
    let a = report("", String::new(), &case_one, req);
    let b = report("", String::new(), &case_two, req);
    Ok(CheckReport {
        name: "fixed-eps-lower-bound",
        tolerance: format!(
            "grid tolerance, grid_n {}; eps = margin {}/{}, eps < margin {}/{}",
            cfg.grid_n, a.passed, n, b.passed, n
        ),
        passed: a.passed.min(b.passed),
        total: n,
        required: req,
        worst: a.worst.max(b.worst),
        ok: a.ok && b.ok,
    })
}

/// If the smallest perturbation reaching level rho has length eps, the
/// largest loss over the eps ball is rho (up to grid tolerance).
pub fn check_min_max_duality(cfg: &TheoryConfig) -> Result<CheckReport> {
    let results = exec::try_map_indexed(cfg.instances, |i| -> Result<(bool, f64)> {
        let mut rng = rng_for(cfg, 60, i);
        let (m, x, y) = relu_instance(&mut rng, 3);
        let l0 = loss_value(LossKind::Lm, &m.logits(&x), y)?;
        let rho = l0 * rng.gen_range(0.0..0.9);
        let eps = eps_star_of_rho(&m, &x, y, rho, Norm::L2, 3.0, cfg.grid_n)?;
        if !eps.is_finite() {
            return Ok((false, f64::INFINITY));
        }
        let tol = lm_tolerance(&m, &x, y, eps, cfg.grid_n)?;
        let (mx, _) = grid_max_loss(&m, &x, y, LossKind::Lm, Norm::L2, eps, cfg.grid_n)?;
        let err = (mx - rho).abs() / tol;
        Ok((err <= 1.0, err))
    })?;
    Ok(report(
        "min-max-duality",
        format!("grid tolerance, grid_n {}", cfg.grid_n),
        &results,
        cfg.required.min(cfg.instances),
    ))
}

/// Run every check in order.
pub fn run_all(cfg: &TheoryConfig) -> Result<Vec<CheckReport>> {
    Ok(vec![
        check_lm_slm_sandwich(cfg)?,
        check_ce_slm_collinearity(cfg)?,
        check_margin_gradient(cfg)?,
        check_loss_descent_grows_margin(cfg)?,
        check_fixed_eps_lower_bound(cfg)?,
        check_min_max_duality(cfg)?,
    ])
}
