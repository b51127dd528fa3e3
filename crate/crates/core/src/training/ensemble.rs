use crate::classifier::{Classifier, LossEval};
use crate::error::{Error, Result};
use crate::losses::{softmax, LossKind};
use crate::numerics::DenseModel;

/// Ordered, non-empty list of models sharing input and output sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<DenseModel>,
}

impl Ensemble {
    pub fn new(members: Vec<DenseModel>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::argument("ensemble needs at least one member"))?;
        let (d, k) = (first.input_dim(), first.num_classes());
        if members.iter().any(|m| m.input_dim() != d || m.num_classes() != k) {
            return Err(Error::argument("ensemble members must share input and output sizes"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[DenseModel] {
        &self.members
    }
}

/// Plurality vote; ties go to the highest summed softmax probability and
/// then to the lowest class index.
pub fn ensemble_predict(ens: &Ensemble, x: &[f64]) -> usize {
    let k = ens.members[0].num_classes();
    let mut votes = vec![0usize; k];
    let mut mass = vec![0.0; k];
    for m in &ens.members {
        let logits = m.logits(x);
        votes[crate::numerics::tensor::argmax(&logits)] += 1;
        for (s, p) in mass.iter_mut().zip(softmax(&logits)) {
            *s += p;
        }
    }
    let mut best = 0;
    for c in 1..k {
        if votes[c] > votes[best] || (votes[c] == votes[best] && mass[c] > mass[best]) {
            best = c;
        }
    }
    best
}

/// The attack loss of an ensemble is the sum of its members' losses.
impl Classifier for Ensemble {
    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn num_classes(&self) -> usize {
        self.members[0].num_classes()
    }

    fn predict(&self, x: &[f64]) -> usize {
        ensemble_predict(self, x)
    }

    fn loss(&self, kind: LossKind, x: &[f64], y: usize) -> Result<f64> {
        self.members.iter().map(|m| m.loss(kind, x, y)).sum()
    }

    fn evaluate(&self, kind: LossKind, x: &[f64], y: usize) -> Result<LossEval> {
        let mut loss = 0.0;
        let mut grad = vec![0.0; x.len()];
        for m in &self.members {
            let e = m.evaluate(kind, x, y)?;
            loss += e.loss;
            crate::numerics::tensor::axpy(1.0, &e.grad, &mut grad);
        }
        Ok(LossEval {
            loss,
            grad,
            predicted: ensemble_predict(self, x),
        })
    }
}
