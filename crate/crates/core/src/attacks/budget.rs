use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::tensor::{l2_norm, linf_norm};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Linf,
    L2,
}

impl Norm {
    pub fn measure(self, v: &[f64]) -> f64 {
        match self {
            Norm::Linf => linf_norm(v),
            Norm::L2 => l2_norm(v),
        }
    }

    /// The dual norm, used for linear-model distances.
    pub fn dual_measure(self, v: &[f64]) -> f64 {
        match self {
            Norm::Linf => crate::numerics::tensor::l1_norm(v),
            Norm::L2 => l2_norm(v),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::Linf => "linf",
            Norm::L2 => "l2",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linf" => Ok(Norm::Linf),
            "l2" => Ok(Norm::L2),
            other => Err(Error::argument(format!("unknown norm `{other}`"))),
        }
    }
}

/// Allowed perturbations: a norm ball of radius `eps` intersected with an
/// optional per-coordinate input box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBudget {
    pub norm: Norm,
    pub eps: f64,
    pub bounds: Option<(f64, f64)>,
}

impl PerturbationBudget {
    pub fn new(norm: Norm, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::argument(format!("eps must be a finite value >= 0, got {eps}")));
        }
        Ok(Self {
            norm,
            eps,
            bounds: None,
        })
    }

    pub fn with_box(mut self, bounds: Option<(f64, f64)>) -> Result<Self> {
        if let Some((lo, hi)) = bounds {
            if !(lo < hi) {
                return Err(Error::argument(format!("box needs lo < hi, got ({lo}, {hi})")));
            }
        }
        self.bounds = bounds;
        Ok(self)
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.norm, eps)?.with_box(self.bounds)
    }

    pub fn contains(&self, x: &[f64], delta: &[f64], tol: f64) -> bool {
        let in_ball = self.norm.measure(delta) <= self.eps + tol;
        let in_box = match self.bounds {
            None => true,
            Some((lo, hi)) => x
                .iter()
                .zip(delta)
                .all(|(xi, di)| xi + di >= lo - tol && xi + di <= hi + tol),
        };
        in_ball && in_box
    }
}

/// Project `delta` onto the ball, then clamp `x + delta` into the box.
pub fn project(x: &[f64], delta: &[f64], budget: &PerturbationBudget) -> Vec<f64> {
    let eps = budget.eps;
    let mut out: Vec<f64> = match budget.norm {
        Norm::Linf => delta.iter().map(|d| d.clamp(-eps, eps)).collect(),
        Norm::L2 => {
            let n = l2_norm(delta);
            if n > eps {
                let s = eps / n;
                delta.iter().map(|d| d * s).collect()
            } else {
                delta.to_vec()
            }
        }
    };
    clamp_to_box(x, &mut out, budget.bounds);
    out
}

/// Replace `delta` so that `x + delta` lies in the box. Coordinates only
/// shrink, so ball membership is preserved for `x` inside the box.
pub fn clamp_to_box(x: &[f64], delta: &mut [f64], bounds: Option<(f64, f64)>) {
    if let Some((lo, hi)) = bounds {
        for (d, &xi) in delta.iter_mut().zip(x) {
            *d = (xi + *d).clamp(lo, hi) - xi;
        }
    }
}

/// A uniform draw from the budget ball (before any box clamp).
pub fn random_init(budget: &PerturbationBudget, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    random_init_with(budget, dim, &mut rng)
}

pub fn random_init_with<R: Rng + ?Sized>(budget: &PerturbationBudget, dim: usize, rng: &mut R) -> Vec<f64> {
    let eps = budget.eps;
    if eps == 0.0 {
        return vec![0.0; dim];
    }
    match budget.norm {
        Norm::Linf => (0..dim).map(|_| rng.gen_range(-eps..=eps)).collect(),
        Norm::L2 => {
            let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let n = l2_norm(&dir);
            let u: f64 = rng.gen();
            let r = eps * u.powf(1.0 / dim as f64);
            if n == 0.0 {
                return vec![0.0; dim];
            }
            dir.into_iter().map(|d| d * r / n).collect()
        }
    }
}
