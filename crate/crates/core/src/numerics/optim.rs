use serde::{Deserialize, Serialize};

use super::model::{DenseModel, ParamGrads};
use crate::error::{Error, Result};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OptimizerSpec {
    Sgd {
        lr: f64,
        #[serde(default)]
        momentum: f64,
        #[serde(default)]
        weight_decay: f64,
    },
    Adam {
        lr: f64,
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps_hat")]
        eps: f64,
        #[serde(default)]
        weight_decay: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps_hat() -> f64 {
    1e-8
}

impl OptimizerSpec {
    pub fn adam(lr: f64) -> Self {
        OptimizerSpec::Adam {
            lr,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps_hat(),
            weight_decay: 0.0,
        }
    }

    pub fn sgd(lr: f64, momentum: f64) -> Self {
        OptimizerSpec::Sgd {
            lr,
            momentum,
            weight_decay: 0.0,
        }
    }

    pub fn lr(&self) -> f64 {
        match self {
            OptimizerSpec::Sgd { lr, .. } | OptimizerSpec::Adam { lr, .. } => *lr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            OptimizerSpec::Sgd {
                lr,
                momentum,
                weight_decay,
            } => lr > 0.0 && (0.0..1.0).contains(&momentum) && weight_decay >= 0.0,
            OptimizerSpec::Adam {
                lr,
                beta1,
                beta2,
                eps,
                weight_decay,
            } => {
                lr > 0.0
                    && (0.0..1.0).contains(&beta1)
                    && (0.0..1.0).contains(&beta2)
                    && eps > 0.0
                    && weight_decay >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::argument(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Moment buffers of an optimizer. Buffers mirror the model parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    spec: OptimizerSpec,
    lr: f64,
    step: u64,
    first: ParamGrads,
    second: Option<ParamGrads>,
}

impl OptimizerState {
    pub fn new(spec: OptimizerSpec, model: &DenseModel) -> Self {
        let second = matches!(spec, OptimizerSpec::Adam { .. }).then(|| ParamGrads::zeros_like(model));
        Self {
            lr: spec.lr(),
            spec,
            step: 0,
            first: ParamGrads::zeros_like(model),
            second,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// Override the current learning rate (piecewise-constant schedules).
    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    /// Apply one update in place.
    pub fn step(&mut self, model: &mut DenseModel, grads: &ParamGrads) -> Result<()> {
        if grads.layers.len() != model.layers().len()
            || grads
                .layers
                .iter()
                .zip(model.layers())
                .any(|(g, l)| g.weights.len() != l.weights.len() || g.bias.len() != l.bias.len())
        {
            return Err(Error::Dimension {
                context: "optimizer gradients",
                expected: model.num_params(),
                actual: grads.flat().len(),
            });
        }
        self.step += 1;
        let lr = self.lr;
        match self.spec {
            OptimizerSpec::Sgd {
                momentum,
                weight_decay,
                ..
            } => {
                for ((layer, g), v) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut self.first.layers)
                {
                    sgd_update(&mut layer.weights, &g.weights, &mut v.weights, lr, momentum, weight_decay);
                    sgd_update(&mut layer.bias, &g.bias, &mut v.bias, lr, momentum, weight_decay);
                }
            }
            OptimizerSpec::Adam {
                beta1,
                beta2,
                eps,
                weight_decay,
                ..
            } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let second = self.second.as_mut().expect("adam state has second moments");
                for (((layer, g), m), v) in model
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut self.first.layers)
                    .zip(&mut second.layers)
                {
                    let hp = AdamStep { lr, beta1, beta2, eps, weight_decay, c1, c2 };
                    hp.apply(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
                    hp.apply(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
                }
            }
        }
        Ok(())
    }
}

fn sgd_update(p: &mut [f64], g: &[f64], vel: &mut [f64], lr: f64, mu: f64, wd: f64) {
    for ((p, &g), v) in p.iter_mut().zip(g).zip(vel) {
        let g = g + wd * *p;
        *v = mu * *v + g;
        *p -= lr * *v;
    }
}

struct AdamStep {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    c1: f64,
    c2: f64,
}

impl AdamStep {
    fn apply(&self, p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]) {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m).zip(v) {
            let g = g + self.weight_decay * *p;
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let mh = *m / self.c1;
            let vh = *v / self.c2;
            *p -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
