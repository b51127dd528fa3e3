use serde::{Deserialize, Serialize};

use super::grads::{weighted_ce_grads, WeightedExample};
use super::store::EpsilonStore;
use crate::attacks::{an_pgd, AnPgdConfig, PerturbationBudget};
use crate::data::Dataset;
use crate::error::Result;
use crate::exec;
use crate::numerics::tensor::add;
use crate::numerics::{DenseModel, ParamGrads};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MmaVariant {
    /// Combined loss with a 1/3 clean term on the correct batch.
    Mma,
    /// Margin loss only.
    Omma,
}

impl MmaVariant {
    pub fn clean_weight(self) -> f64 {
        match self {
            MmaVariant::Mma => 1.0 / 3.0,
            MmaVariant::Omma => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MmaBatchStats {
    pub batch: usize,
    pub correct: usize,
    /// Correct examples whose perturbation fell inside the hinge.
    pub admitted: usize,
    /// Attacks that errored and were treated as robust.
    pub attack_errors: usize,
}

enum Outcome {
    Wrong,
    Correct { magnitude: f64, adv: Option<Vec<f64>>, errored: bool },
}

/// Loss and parameter gradient of one MMA minibatch, updating the stored
/// per-example eps in place:
///
/// `(1/m) [ sum_{B0} CE(x) + w sum_{B1} CE(x) + (1 - w) sum_{B1 adv} CE(x + delta*) ]`
///
/// with `B0` the misclassified examples, `B1` the correct ones, `B1 adv`
/// those with `||delta*|| < d_max`, and `w` the variant's clean weight.
pub fn mma_minibatch_loss(
    model: &DenseModel,
    data: &Dataset,
    batch: &[usize],
    store: &mut EpsilonStore,
    d_max: f64,
    variant: MmaVariant,
    budget: &PerturbationBudget,
    attack: &AnPgdConfig,
    seed: u64,
) -> Result<(f64, ParamGrads, MmaBatchStats)> {
    let (_, eps_max) = store.bounds();
    let frozen: &EpsilonStore = store;
    let outcomes = exec::map_indexed(batch.len(), |k| {
        let i = batch[k];
        let (x, y) = (data.input(i), data.label(i));
        if model.predict(x) != y {
            return Outcome::Wrong;
        }
        let s = seed::derive(seed, &[i as u64]);
        match an_pgd(model, x, y, budget, frozen.get(i), eps_max, attack, s) {
            Ok(r) => {
                let inside = r.successful && r.magnitude < d_max;
                Outcome::Correct {
                    magnitude: if r.successful { r.magnitude } else { eps_max },
                    adv: inside.then(|| add(x, &r.delta)),
                    errored: false,
                }
            }
            Err(_) => Outcome::Correct {
                magnitude: eps_max,
                adv: None,
                errored: true,
            },
        }
    });

    let m = batch.len() as f64;
    let w = variant.clean_weight();
    let mut items = Vec::new();
    let mut stats = MmaBatchStats {
        batch: batch.len(),
        ..Default::default()
    };
    for (k, o) in outcomes.into_iter().enumerate() {
        let i = batch[k];
        let (x, y) = (data.input(i), data.label(i));
        match o {
            Outcome::Wrong => items.push(WeightedExample {
                input: x.to_vec(),
                label: y,
                weight: 1.0 / m,
            }),
            Outcome::Correct { magnitude, adv, errored } => {
                stats.correct += 1;
                stats.attack_errors += errored as usize;
                store.set(i, magnitude);
                items.push(WeightedExample {
                    input: x.to_vec(),
                    label: y,
                    weight: w / m,
                });
                if let Some(a) = adv {
                    stats.admitted += 1;
                    items.push(WeightedExample {
                        input: a,
                        label: y,
                        weight: (1.0 - w) / m,
                    });
                }
            }
        }
    }
    let (loss, grads) = weighted_ce_grads(model, &items)?;
    Ok((loss, grads, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::{Norm, PgdConfig};
    use crate::data::DatasetMeta;
    use crate::losses::{loss_value, LossKind};
    use crate::numerics::DenseTensor;

    fn line_data(xs: &[f64], ys: &[usize]) -> Dataset {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 0.0]).collect();
        Dataset::new(
            DenseTensor::from_rows(&rows).unwrap(),
            ys.to_vec(),
            DatasetMeta {
                name: "line".into(),
                bounds: None,
                num_classes: 2,
            },
        )
        .unwrap()
    }

    fn attack() -> AnPgdConfig {
        AnPgdConfig::new(PgdConfig::new(10, LossKind::Slm), LossKind::Slm)
    }

    #[test]
    fn all_wrong_is_mean_clean_ce() {
        // Boundary x0 = 0; label 1 iff x0 > 0. Labels are flipped.
        let m = DenseModel::binary_linear(&[1.0, 0.0], 0.0).unwrap();
        let d = line_data(&[1.0, 2.0, -1.0], &[0, 0, 1]);
        let mut store = EpsilonStore::new(3, 0.1, 1.05).unwrap();
        let before = store.clone();
        let b = PerturbationBudget::new(Norm::L2, 0.0).unwrap();
        let (loss, _, stats) =
            mma_minibatch_loss(&m, &d, &[0, 1, 2], &mut store, 1.0, MmaVariant::Mma, &b, &attack(), 0).unwrap();
        let want: f64 = (0..3)
            .map(|i| loss_value(LossKind::Ce, &m.logits(d.input(i)), d.label(i)).unwrap())
            .sum::<f64>()
            / 3.0;
        assert!((loss - want).abs() < 1e-12);
        assert_eq!(store, before);
        assert_eq!(stats.correct, 0);
    }

    #[test]
    fn hinge_excludes_far_points_and_store_tracks_margin() {
        let m = DenseModel::binary_linear(&[1.0, 0.0], 0.0).unwrap();
        // Margins 0.5 and 3.0; d_max = 1.
        let d = line_data(&[0.5, 3.0], &[1, 1]);
        let mut store = EpsilonStore::new(2, 0.05, 1.05).unwrap();
        let b = PerturbationBudget::new(Norm::L2, 0.0).unwrap();
        let (loss, _, stats) =
            mma_minibatch_loss(&m, &d, &[0, 1], &mut store, 1.0, MmaVariant::Mma, &b, &attack(), 3).unwrap();
        assert_eq!(stats.correct, 2);
        assert_eq!(stats.admitted, 1);
        assert!((store.get(0) - 0.5).abs() < 2e-3, "{}", store.get(0));
        assert_eq!(store.get(1), 1.05);
        // Clean terms at 1/3 for both, adversarial term at 2/3 for the first.
        let ce = |x: f64| loss_value(LossKind::Ce, &m.logits(&[x, 0.0]), 1).unwrap();
        let adv_x = 0.5 - store.get(0);
        let want = (ce(0.5) / 3.0 + ce(3.0) / 3.0 + 2.0 / 3.0 * ce(adv_x)) / 2.0;
        assert!((loss - want).abs() < 1e-9, "{loss} vs {want}");

        let mut s2 = EpsilonStore::new(2, 0.05, 1.05).unwrap();
        let (oloss, _, _) =
            mma_minibatch_loss(&m, &d, &[0, 1], &mut s2, 1.0, MmaVariant::Omma, &b, &attack(), 3).unwrap();
        assert!((oloss - ce(adv_x) / 2.0).abs() < 1e-9);
    }
}
