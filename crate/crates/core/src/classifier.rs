use crate::error::{Error, Result};
use crate::losses::{loss_and_grad, loss_value, LossKind};
use crate::numerics::tensor::argmax;
use crate::numerics::DenseModel;

/// What attacks and evaluation need from a model: a label prediction and a
/// differentiable attack loss with respect to the input.
pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn predict(&self, x: &[f64]) -> usize;
    fn loss(&self, kind: LossKind, x: &[f64], y: usize) -> Result<f64>;
    /// Loss, its input gradient and the predicted label at `x`.
    fn evaluate(&self, kind: LossKind, x: &[f64], y: usize) -> Result<LossEval>;

    fn loss_and_input_grad(&self, kind: LossKind, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
        let e = self.evaluate(kind, x, y)?;
        Ok((e.loss, e.grad))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub predicted: usize,
}

impl Classifier for DenseModel {
    fn input_dim(&self) -> usize {
        DenseModel::input_dim(self)
    }

    fn num_classes(&self) -> usize {
        DenseModel::num_classes(self)
    }

    fn predict(&self, x: &[f64]) -> usize {
        DenseModel::predict(self, x)
    }

    fn loss(&self, kind: LossKind, x: &[f64], y: usize) -> Result<f64> {
        loss_value(kind, &self.logits(x), y)
    }

    fn evaluate(&self, kind: LossKind, x: &[f64], y: usize) -> Result<LossEval> {
        let t = self.trace(x);
        let (v, up) = loss_and_grad(kind, t.logits(), y)?;
        let g = self.pullback(&t, &up, None, true).expect("input gradient requested");
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                context: "input gradient",
                iterate: None,
            });
        }
        Ok(LossEval {
            loss: v,
            grad: g,
            predicted: argmax(t.logits()),
        })
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn predict(&self, x: &[f64]) -> usize {
        (**self).predict(x)
    }
    fn loss(&self, kind: LossKind, x: &[f64], y: usize) -> Result<f64> {
        (**self).loss(kind, x, y)
    }
    fn evaluate(&self, kind: LossKind, x: &[f64], y: usize) -> Result<LossEval> {
        (**self).evaluate(kind, x, y)
    }
}
