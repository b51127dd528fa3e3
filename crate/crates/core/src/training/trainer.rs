use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::{Method, TrainConfig};
use super::grads::{weighted_ce_grads, WeightedExample};
use super::mma::{mma_minibatch_loss, MmaVariant};
use super::store::EpsilonStore;
use crate::attacks::{pgd_attack, AnPgdConfig, PerturbationBudget};
use crate::data::{split_train_val, Dataset};
use crate::error::{Error, Result};
use crate::exec;
use crate::losses::LossKind;
use crate::margin::{estimate_margin, MarginConfig};
use crate::numerics::tensor::add;
use crate::numerics::{DenseModel, OptimizerState};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    /// Mean minibatch objective.
    pub train_loss: f64,
    /// Clean accuracy on the training split at the end of the epoch, in %.
    pub train_acc: f64,
    /// Training attack radius (fixed-eps methods) or mean stored eps (MMA).
    pub eps: f64,
    /// Fraction of correct examples admitted by the hinge (MMA).
    pub admitted: Option<f64>,
    pub val_mean_margin: Option<f64>,
    pub val_p10_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginTraceRow {
    pub epoch: usize,
    pub example: usize,
    pub margin: f64,
    pub successful: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: DenseModel,
    pub history: Vec<EpochMetrics>,
    /// Eps store after every epoch (MMA only).
    pub store_history: Vec<EpsilonStore>,
    /// Epoch whose parameters were returned, when selection was applied.
    pub selected_epoch: Option<usize>,
    /// Validation margins per epoch, when monitored.
    pub margin_trace: Vec<MarginTraceRow>,
    /// Number of leading examples held out for validation.
    pub val_len: usize,
}

fn check(data: &Dataset, cfg: &TrainConfig) -> Result<()> {
    if data.is_empty() {
        return Err(Error::argument("training data is empty"));
    }
    cfg.validate()
}

fn widths(data: &Dataset, cfg: &TrainConfig) -> Vec<usize> {
    let mut w = vec![data.dim()];
    w.extend(&cfg.hidden);
    w.push(data.num_classes());
    w
}

/// Train a freshly initialized model with the configured method.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    check(data, cfg)?;
    let model = DenseModel::init(&widths(data, cfg), cfg.seed)?;
    train_from(model, data, cfg)
}

pub fn train_standard(data: &Dataset, cfg: &TrainConfig) -> Result<DenseModel> {
    with_method(data, cfg, Method::Std).map(|o| o.model)
}

pub fn train_pgd(data: &Dataset, cfg: &TrainConfig) -> Result<DenseModel> {
    with_method(data, cfg, Method::Pgd).map(|o| o.model)
}

pub fn train_pgdls(data: &Dataset, cfg: &TrainConfig) -> Result<DenseModel> {
    with_method(data, cfg, Method::Pgdls).map(|o| o.model)
}

/// MMA training (or OMMA when so configured) with the eps store history.
pub fn train_mma(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if !cfg.method.is_margin() {
        return with_method(data, cfg, Method::Mma);
    }
    train(data, cfg)
}

fn with_method(data: &Dataset, cfg: &TrainConfig, method: Method) -> Result<TrainOutcome> {
    let mut c = cfg.clone();
    c.method = method;
    train(data, &c)
}

fn margin_cap(cfg: &TrainConfig) -> f64 {
    if cfg.method.is_margin() {
        cfg.eps_max()
    } else {
        match cfg.eps {
            Some(e) if e > 0.0 => 2.0 * e,
            _ => 1.0,
        }
    }
}

/// Continue training `model` on `data`.
pub fn train_from(mut model: DenseModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    check(data, cfg)?;
    if model.input_dim() != data.dim() || model.num_classes() < data.num_classes() {
        return Err(Error::Dimension {
            context: "model versus training data",
            expected: data.dim(),
            actual: model.input_dim(),
        });
    }
    let selecting = cfg.method.is_margin() && cfg.select_checkpoint;
    let monitoring = selecting || cfg.monitor_margins;
    let (train_set, val_set) = if monitoring {
        let (t, v) = split_train_val(data, cfg.val_fraction)?;
        (t, Some(v))
    } else {
        (data.clone(), None)
    };
    let n = train_set.len();
    let budget = PerturbationBudget::new(cfg.norm, 0.0)?.with_box(data.bounds())?;
    let pgd_cfg = cfg.attack_config();
    let mut an_cfg = AnPgdConfig::new(pgd_cfg.clone(), LossKind::Slm);
    an_cfg.bisection_steps = cfg.bisection_steps;
    let variant = if cfg.method == Method::Omma {
        MmaVariant::Omma
    } else {
        MmaVariant::Mma
    };
    let mut store = if cfg.method.is_margin() {
        Some(EpsilonStore::new(n, cfg.eps_min(), cfg.eps_max())?)
    } else {
        None
    };

    let cap = margin_cap(cfg);
    let mut monitor_cfg = MarginConfig::new(cap, cap);
    monitor_cfg.rounds = 1;
    monitor_cfg.pgd_losses.clear();
    monitor_cfg.attack.pgd.restarts = 1;
    monitor_cfg.attack.pgd.steps = cfg.attack_steps;
    monitor_cfg.attack.bisection_steps = cfg.bisection_steps;
    let mut val_eps: Vec<f64> = val_set.as_ref().map_or(Vec::new(), |v| vec![0.5 * cap; v.len()]);

    let mut opt = OptimizerState::new(cfg.optimizer.clone(), &model);
    let mut out = TrainOutcome {
        model: model.clone(),
        history: Vec::new(),
        store_history: Vec::new(),
        selected_epoch: None,
        margin_trace: Vec::new(),
        val_len: val_set.as_ref().map_or(0, Dataset::len),
    };
    let mut best: Option<(f64, usize, DenseModel)> = None;

    for epoch in 0..cfg.epochs {
        opt.set_learning_rate(cfg.lr_at(epoch));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed::derive(cfg.seed, &[seed::stream::SHUFFLE, epoch as u64])));
        let attack_seed = seed::derive(cfg.seed, &[seed::stream::TRAIN_ATTACK, epoch as u64]);
        let eps = cfg.eps_at(epoch);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        let (mut correct, mut admitted) = (0usize, 0usize);

        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = match cfg.method {
                Method::Std => {
                    let items = plain_items(&train_set, batch, |i| train_set.input(i).to_vec());
                    weighted_ce_grads(&model, &items)?
                }
                Method::Pgd | Method::Pgdls => {
                    let b = budget.with_eps(eps)?;
                    let m = &model;
                    let advs = exec::try_map_indexed(batch.len(), |k| {
                        let i = batch[k];
                        let x = train_set.input(i);
                        let s = seed::derive(attack_seed, &[i as u64]);
                        pgd_attack(m, x, train_set.label(i), &b, &pgd_cfg, s).map(|r| add(x, &r.delta))
                    })?;
                    let items = plain_items(&train_set, batch, |i| {
                        let k = batch.iter().position(|&j| j == i).expect("batch member");
                        advs[k].clone()
                    });
                    weighted_ce_grads(&model, &items)?
                }
                Method::Mma | Method::Omma => {
                    let st = store.as_mut().expect("store exists for margin methods");
                    let (loss, grads, stats) = mma_minibatch_loss(
                        &model,
                        &train_set,
                        batch,
                        st,
                        cfg.d_max.expect("validated"),
                        variant,
                        &budget,
                        &an_cfg,
                        attack_seed,
                    )?;
                    correct += stats.correct;
                    admitted += stats.admitted;
                    (loss, grads)
                }
            };
            opt.step(&mut model, &grads)?;
            loss_sum += loss;
            batches += 1;
        }

        let acc = accuracy(&model, &train_set);
        let mut metrics = EpochMetrics {
            epoch,
            lr: opt.learning_rate(),
            train_loss: if batches > 0 { loss_sum / batches as f64 } else { 0.0 },
            train_acc: acc,
            eps: match &store {
                Some(s) => s.values().iter().sum::<f64>() / n as f64,
                None => eps,
            },
            admitted: store
                .as_ref()
                .map(|_| if correct > 0 { admitted as f64 / correct as f64 } else { 0.0 }),
            val_mean_margin: None,
            val_p10_margin: None,
        };
        if let Some(val) = &val_set {
            let ms = val_margins(&model, val, &budget, &monitor_cfg, &val_eps, cfg.seed, epoch)?;
            for (i, (m, ok)) in ms.iter().enumerate() {
                out.margin_trace.push(MarginTraceRow {
                    epoch,
                    example: i,
                    margin: *m,
                    successful: *ok,
                });
                if *m > 0.0 {
                    val_eps[i] = m.min(cap);
                }
            }
            let vals: Vec<f64> = ms.iter().map(|m| m.0).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            metrics.val_mean_margin = Some(mean);
            metrics.val_p10_margin = Some(percentile(&vals, 0.1));
            if selecting && best.as_ref().map_or(true, |b| mean > b.0) {
                best = Some((mean, epoch, model.clone()));
            }
        }
        out.history.push(metrics);
        if let Some(s) = &store {
            out.store_history.push(s.clone());
        }
    }

    out.model = match best {
        Some((_, epoch, m)) => {
            out.selected_epoch = Some(epoch);
            m
        }
        None => model,
    };
    Ok(out)
}

fn plain_items(data: &Dataset, batch: &[usize], input: impl Fn(usize) -> Vec<f64>) -> Vec<WeightedExample> {
    let m = batch.len() as f64;
    batch
        .iter()
        .map(|&i| WeightedExample {
            input: input(i),
            label: data.label(i),
            weight: 1.0 / m,
        })
        .collect()
}

/// Clean accuracy in percent.
pub(crate) fn accuracy(model: &DenseModel, data: &Dataset) -> f64 {
    let hits: usize = exec::map_indexed(data.len(), |i| (model.predict(data.input(i)) == data.label(i)) as usize)
        .into_iter()
        .sum();
    100.0 * hits as f64 / data.len() as f64
}

fn val_margins(
    model: &DenseModel,
    val: &Dataset,
    budget: &PerturbationBudget,
    cfg: &MarginConfig,
    warm: &[f64],
    base_seed: u64,
    epoch: usize,
) -> Result<Vec<(f64, bool)>> {
    let s = seed::derive(base_seed, &[seed::stream::MARGIN, epoch as u64]);
    exec::try_map_indexed(val.len(), |i| {
        let mut c = cfg.clone();
        c.eps_init = warm[i].clamp(1e-6, c.eps_max);
        let e = estimate_margin(model, val.input(i), val.label(i), budget, &c, seed::derive(s, &[i as u64]))?;
        Ok((e.value, e.successful))
    })
}

/// Nearest-rank percentile of `v` at fraction `q`.
pub(crate) fn percentile(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let k = ((q * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::Norm;
    use crate::data::gen_blobs;
    use crate::numerics::OptimizerSpec;

    fn blobs() -> Dataset {
        gen_blobs(200, &[vec![-1.5, 0.0], vec![1.5, 0.0]], 0.3, 1).unwrap()
    }

    fn cfg(method: Method, epochs: usize) -> TrainConfig {
        TrainConfig::new(method, Norm::L2, OptimizerSpec::adam(0.01), epochs)
            .with_hidden(&[16])
            .with_batch_size(20)
            .with_seed(4)
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let d = blobs();
        let m = train_standard(&d, &cfg(Method::Std, 0)).unwrap();
        assert_eq!(m, DenseModel::init(&[2, 16, 2], 4).unwrap());
    }

    #[test]
    fn standard_training_separates_blobs() {
        let d = blobs();
        let m = train_standard(&d, &cfg(Method::Std, 30)).unwrap();
        assert!(accuracy(&m, &d) >= 99.0);
        assert_eq!(m, train_standard(&d, &cfg(Method::Std, 30)).unwrap());
    }

    #[test]
    fn zero_eps_pgd_equals_standard() {
        let d = blobs();
        let mut c = cfg(Method::Pgd, 5).with_eps(0.0);
        c.attack_rand_init = false;
        assert_eq!(train_pgd(&d, &c).unwrap(), train_standard(&d, &c).unwrap());
    }

    #[test]
    fn pgdls_first_epoch_is_standard() {
        let d = blobs();
        let mut c = cfg(Method::Pgdls, 4).with_eps(1.0);
        c.attack_rand_init = false;
        let mut one = c.clone();
        one.epochs = 1;
        let a = train_pgdls(&d, &one).unwrap();
        let mut s = one.clone();
        s.method = Method::Std;
        assert_eq!(a, train_standard(&d, &s).unwrap());
    }

    #[test]
    fn pgdls_with_unit_ramp_matches_pgd_after_first_epoch() {
        let d = blobs();
        let mut ls = cfg(Method::Pgdls, 3).with_eps(0.5);
        ls.ramp_epochs = Some(1);
        let mut p = ls.clone();
        p.method = Method::Pgd;
        for e in 1..3 {
            assert_eq!(ls.eps_at(e), p.eps_at(e));
        }
        // Same seeds and same radius from epoch 1 on: the two runs differ
        // only through the first epoch.
        let a = train_pgdls(&d, &ls).unwrap();
        let b = train_pgd(&d, &p).unwrap();
        assert_ne!(a, b);
        let mut s = ls.clone();
        s.epochs = 1;
        s.method = Method::Std;
        let warm = train_standard(&d, &s).unwrap();
        let mut p1 = p.clone();
        p1.epochs = 1;
        assert_eq!(ls.eps_at(0), 0.0);
        assert!(accuracy(&warm, &d) > 50.0);
    }

    #[test]
    fn mma_store_bounded_and_selects_checkpoint() {
        let d = blobs();
        let c = cfg(Method::Mma, 4).with_d_max(1.0);
        let out = train_mma(&d, &c).unwrap();
        assert_eq!(out.store_history.len(), 4);
        for s in &out.store_history {
            assert!(s.within_bounds());
            assert!(s.values().iter().all(|&v| v <= 1.05 + 1e-12));
        }
        assert!(out.selected_epoch.is_some());
        assert_eq!(out.val_len, 20);
        assert_eq!(out.margin_trace.len(), 4 * 20);
    }

    #[test]
    fn percentile_nearest_rank() {
        assert_eq!(percentile(&[5.0, 1.0, 3.0, 2.0, 4.0], 0.1), 1.0);
        assert_eq!(percentile(&[5.0, 1.0, 3.0, 2.0, 4.0], 0.5), 3.0);
    }
}
