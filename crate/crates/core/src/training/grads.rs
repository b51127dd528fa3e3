use crate::error::{Error, Result};
use crate::exec;
use crate::losses::{loss_and_grad, LossKind};
use crate::numerics::{DenseModel, ParamGrads};

/// One term `weight * CE(model(input), label)` of a training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedExample {
    pub input: Vec<f64>,
    pub label: usize,
    pub weight: f64,
}

/// Weighted CE sum and its parameter gradient. Terms are accumulated in
/// fixed chunks, in order, so the result does not depend on threading.
pub fn weighted_ce_grads(model: &DenseModel, items: &[WeightedExample]) -> Result<(f64, ParamGrads)> {
    let chunks = exec::chunks(items.len());
    let parts = exec::try_map_indexed(chunks.len(), |c| -> Result<(f64, ParamGrads)> {
        let mut g = ParamGrads::zeros_like(model);
        let mut loss = 0.0;
        for it in &items[chunks[c].clone()] {
            if it.weight == 0.0 {
                continue;
            }
            let t = model.trace(&it.input);
            let (v, mut up) = loss_and_grad(LossKind::Ce, t.logits(), it.label)?;
            up.iter_mut().for_each(|u| *u *= it.weight);
            model.pullback(&t, &up, Some(&mut g), false);
            loss += it.weight * v;
        }
        Ok((loss, g))
    })?;
    let mut total = ParamGrads::zeros_like(model);
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        total.add_scaled(1.0, &g);
    }
    if !loss.is_finite() || !total.is_finite() {
        return Err(Error::Numeric {
            context: "training gradient",
            iterate: None,
        });
    }
    Ok((loss, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::serial_scope;
    use crate::numerics::DenseTensor;

    #[test]
    fn matches_batched_backward() {
        let m = DenseModel::init(&[3, 5, 4], 2).unwrap();
        let xs: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64 * 0.1, -0.3, (i % 5) as f64]).collect();
        let items: Vec<WeightedExample> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| WeightedExample {
                input: x.clone(),
                label: i % 4,
                weight: 1.0 / 37.0,
            })
            .collect();
        let (loss, g) = weighted_ce_grads(&m, &items).unwrap();
        let mut ups = Vec::new();
        let mut want = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let (v, up) = loss_and_grad(LossKind::Ce, &m.logits(x), i % 4).unwrap();
            want += v / 37.0;
            ups.extend(up.iter().map(|u| u / 37.0));
        }
        let t = DenseTensor::from_rows(&xs).unwrap();
        let (pg, _) = m.backward(&t, &DenseTensor::new(vec![37, 4], ups).unwrap()).unwrap();
        assert!((loss - want).abs() < 1e-12);
        for (a, b) in g.flat().iter().zip(pg.flat()) {
            assert!((a - b).abs() < 1e-12);
        }
        let (l2, g2) = serial_scope(|| weighted_ce_grads(&m, &items).unwrap());
        assert_eq!(l2.to_bits(), loss.to_bits());
        assert_eq!(g2, g);
    }
}
