use super::metrics::compute_metrics;
use super::report::{EvalReport, ModelReport};
use super::suite::AttackSuite;
use crate::attacks::{pgd_single, Norm, PerturbationBudget, TranscriptRow};
use crate::classifier::Classifier;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::tensor::add;
use crate::seed;
use crate::training::Ensemble;

/// A model taking part in an evaluation. Entries sharing a `seed_key` draw
/// identical attack seeds, so a clone of a model is attacked identically.
#[derive(Clone, Copy)]
pub struct ZooEntry<'a> {
    pub name: &'a str,
    pub model: &'a dyn Classifier,
    pub seed_key: u64,
}

impl<'a> ZooEntry<'a> {
    pub fn new(name: &'a str, model: &'a dyn Classifier, seed_key: u64) -> Self {
        Self { name, model, seed_key }
    }
}

/// Full evaluation output. Failure matrices are indexed
/// `[model][example][eps]`; a clean misclassification fails every eps.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub whitebox_fail: Vec<Vec<Vec<bool>>>,
    pub combined_fail: Vec<Vec<Vec<bool>>>,
    /// Whitebox attack records per model.
    pub transcripts: Vec<Vec<TranscriptRow>>,
}

struct ExampleOutcome {
    wb: Vec<Vec<bool>>,
    comb: Vec<Vec<bool>>,
    rows: Vec<Vec<TranscriptRow>>,
    violations: usize,
}

fn check_inputs(zoo: &[ZooEntry<'_>], data: &Dataset, eps_grid: &[f64], suite: &AttackSuite) -> Result<()> {
    if zoo.is_empty() {
        return Err(Error::argument("evaluation needs at least one model"));
    }
    if eps_grid.is_empty() {
        return Err(Error::argument("eps grid is empty"));
    }
    if eps_grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::argument("eps grid values must be >= 0"));
    }
    suite.validate()?;
    let (d, k) = (zoo[0].model.input_dim(), zoo[0].model.num_classes());
    for z in zoo {
        if z.model.input_dim() != d || z.model.num_classes() != k {
            return Err(Error::argument(format!(
                "model `{}` has inconsistent input or output dimensions",
                z.name
            )));
        }
    }
    if data.dim() != d {
        return Err(Error::argument(format!(
            "data dimension {} does not match model input dimension {d}",
            data.dim()
        )));
    }
    Ok(())
}

/// Whitebox attacks on every model, every perturbation also transferred to
/// every other model. A target fails an (example, eps) cell when any own
/// restart or any transferred perturbation flips its prediction.
pub fn combined_eval(
    zoo: &[ZooEntry<'_>],
    data: &Dataset,
    norm: Norm,
    eps_grid: &[f64],
    suite: &AttackSuite,
    seed: u64,
) -> Result<EvalOutput> {
    check_inputs(zoo, data, eps_grid, suite)?;
    let m = zoo.len();
    let g = eps_grid.len();
    let runs = suite.runs();
    let base = seed::derive(seed, &[seed::stream::EVAL_ATTACK]);

    let per_example = exec::try_map_indexed(data.len(), |i| -> Result<ExampleOutcome> {
        let (x, y) = (data.input(i), data.label(i));
        let clean_wrong: Vec<bool> = zoo.iter().map(|z| z.model.predict(x) != y).collect();
        let mut wb: Vec<Vec<bool>> = clean_wrong.iter().map(|&w| vec![w; g]).collect();
        let mut comb = wb.clone();
        let mut rows = vec![Vec::new(); m];
        let mut violations = 0;
        for (s, src) in zoo.iter().enumerate() {
            for (e, &eps) in eps_grid.iter().enumerate() {
                let budget = PerturbationBudget::new(norm, eps)?.with_box(data.bounds())?;
                for (run, &(a, _)) in runs.iter().enumerate() {
                    let spec = &suite.attacks[a];
                    let cfg = spec.pgd_config(norm, eps);
                    let sd = seed::derive(base, &[i as u64, run as u64, src.seed_key, e as u64]);
                    let r = pgd_single(src.model, x, y, &budget, &cfg, sd)?;
                    if !budget.contains(x, &r.delta, 1e-9) {
                        violations += 1;
                    }
                    let adv = add(x, &r.delta);
                    for (t, tgt) in zoo.iter().enumerate() {
                        let flipped = if t == s { r.success } else { tgt.model.predict(&adv) != y };
                        if flipped {
                            comb[t][e] = true;
                            if t == s {
                                wb[t][e] = true;
                            }
                        }
                    }
                    rows[s].push(TranscriptRow {
                        example: i,
                        eps,
                        restart: run,
                        loss: spec.loss.name().to_string(),
                        success: r.success,
                        final_loss: r.final_loss,
                    });
                }
            }
        }
        Ok(ExampleOutcome {
            wb,
            comb,
            rows,
            violations,
        })
    })?;

    let n = data.len() as f64;
    let mut whitebox_fail = vec![Vec::with_capacity(data.len()); m];
    let mut combined_fail = vec![Vec::with_capacity(data.len()); m];
    let mut transcripts = vec![Vec::new(); m];
    let mut violations = 0;
    for o in per_example {
        violations += o.violations;
        for t in 0..m {
            whitebox_fail[t].push(o.wb[t].clone());
            combined_fail[t].push(o.comb[t].clone());
        }
        for (t, r) in o.rows.into_iter().enumerate() {
            transcripts[t].extend(r);
        }
    }

    let rob = |fails: &[Vec<bool>], e: usize| {
        100.0 * (fails.len() - fails.iter().filter(|f| f[e]).count()) as f64 / n
    };
    let mut models = Vec::with_capacity(m);
    for (t, z) in zoo.iter().enumerate() {
        let clean_hits = (0..data.len())
            .filter(|&i| z.model.predict(data.input(i)) == data.label(i))
            .count();
        let clean_acc = 100.0 * clean_hits as f64 / n;
        let whitebox_rob: Vec<f64> = (0..g).map(|e| rob(&whitebox_fail[t], e)).collect();
        let combined_rob: Vec<f64> = (0..g).map(|e| rob(&combined_fail[t], e)).collect();
        let transfer_gap = whitebox_rob.iter().zip(&combined_rob).map(|(w, c)| w - c).collect();
        let (avg_acc, avg_rob_acc) = compute_metrics(clean_acc, &combined_rob)?;
        let (wb_avg_acc, wb_avg_rob_acc) = compute_metrics(clean_acc, &whitebox_rob)?;
        models.push(ModelReport {
            name: z.name.to_string(),
            clean_acc,
            whitebox_rob,
            combined_rob,
            transfer_gap,
            avg_acc,
            avg_rob_acc,
            whitebox_avg_acc: wb_avg_acc,
            whitebox_avg_rob_acc: wb_avg_rob_acc,
        });
    }
    Ok(EvalOutput {
        report: EvalReport {
            norm,
            eps_grid: eps_grid.to_vec(),
            examples: data.len(),
            restarts: suite.total_restarts(),
            invariant_violations: violations,
            models,
        },
        whitebox_fail,
        combined_fail,
        transcripts,
    })
}

/// Per-example, per-eps whitebox success matrix of one model.
pub fn whitebox_eval(
    model: &dyn Classifier,
    data: &Dataset,
    norm: Norm,
    eps_grid: &[f64],
    suite: &AttackSuite,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    let zoo = [ZooEntry::new("model", model, 0)];
    let mut out = combined_eval(&zoo, data, norm, eps_grid, suite, seed)?;
    Ok(out.whitebox_fail.swap_remove(0))
}

/// Evaluate an ensemble: whitebox attacks descend the summed member loss,
/// predictions use the vote, and perturbations from `others` are pooled
/// as transfer attacks. The report holds the ensemble row only.
pub fn ensemble_eval(
    ens: &Ensemble,
    name: &str,
    seed_key: u64,
    others: &[ZooEntry<'_>],
    data: &Dataset,
    norm: Norm,
    eps_grid: &[f64],
    suite: &AttackSuite,
    seed: u64,
) -> Result<EvalOutput> {
    let mut zoo = vec![ZooEntry::new(name, ens, seed_key)];
    zoo.extend_from_slice(others);
    let mut out = combined_eval(&zoo, data, norm, eps_grid, suite, seed)?;
    out.report.models.truncate(1);
    out.whitebox_fail.truncate(1);
    out.combined_fail.truncate(1);
    out.transcripts.truncate(1);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_blobs;
    use crate::margin::linear_margin_analytic;
    use crate::numerics::DenseModel;

    fn data() -> Dataset {
        gen_blobs(40, &[vec![-1.0, 0.5], vec![1.0, -0.5]], 0.6, 2).unwrap()
    }

    #[test]
    fn linear_whitebox_matches_analytic_threshold() {
        let (w, b) = ([1.0, -0.5], 0.1);
        let m = DenseModel::binary_linear(&w, b).unwrap();
        let d = data();
        let grid = [0.0, 0.1, 0.3, 0.6, 1.0];
        let suite = AttackSuite::standard(2).unwrap();
        for norm in [Norm::Linf, Norm::L2] {
            let s = whitebox_eval(&m, &d, norm, &grid, &suite, 7).unwrap();
            for i in 0..d.len() {
                let x = d.input(i);
                let wrong = Classifier::predict(&m, x) != d.label(i);
                let dist = linear_margin_analytic(&w, b, x, norm).unwrap();
                for (e, &eps) in grid.iter().enumerate() {
                    // Skip cells within numerical reach of the boundary.
                    if !wrong && (dist - eps).abs() < 1e-6 {
                        continue;
                    }
                    let expect = wrong || dist < eps;
                    assert_eq!(s[i][e], expect, "{norm} example {i} eps {eps} dist {dist}");
                }
                assert_eq!(s[i][0], wrong);
            }
        }
    }

    #[test]
    fn single_model_has_no_transfer_gap_and_clone_adds_none() {
        let m = DenseModel::init(&[2, 8, 2], 3).unwrap();
        let d = data();
        let grid = [0.2, 0.5];
        let suite = AttackSuite::standard(2).unwrap();
        let one = combined_eval(&[ZooEntry::new("a", &m, 0)], &d, Norm::Linf, &grid, &suite, 1).unwrap();
        assert!(one.report.models[0].transfer_gap.iter().all(|&g| g == 0.0));
        let clone = m.clone();
        let two = combined_eval(
            &[ZooEntry::new("a", &m, 0), ZooEntry::new("b", &clone, 0)],
            &d,
            Norm::Linf,
            &grid,
            &suite,
            1,
        )
        .unwrap();
        for r in &two.report.models {
            assert!(r.transfer_gap.iter().all(|&g| g == 0.0));
            assert_eq!(r.whitebox_rob, one.report.models[0].whitebox_rob);
        }
        assert_eq!(two.report.invariant_violations, 0);
    }

    #[test]
    fn pooling_never_raises_accuracy() {
        let a = DenseModel::init(&[2, 8, 2], 3).unwrap();
        let b = DenseModel::init(&[2, 8, 2], 4).unwrap();
        let d = data();
        let suite = AttackSuite::standard(2).unwrap();
        let out = combined_eval(
            &[ZooEntry::new("a", &a, 0), ZooEntry::new("b", &b, 1)],
            &d,
            Norm::L2,
            &[0.1, 0.4],
            &suite,
            5,
        )
        .unwrap();
        for r in &out.report.models {
            for (w, c) in r.whitebox_rob.iter().zip(&r.combined_rob) {
                assert!(c <= w);
            }
            assert!(r.transfer_gap.iter().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn ensemble_of_one_and_of_twins() {
        let m = DenseModel::init(&[2, 8, 2], 3).unwrap();
        let d = data();
        let grid = [0.0, 0.3];
        let suite = AttackSuite::standard(2).unwrap();
        let solo = whitebox_eval(&m, &d, Norm::Linf, &grid, &suite, 9).unwrap();
        let e1 = Ensemble::new(vec![m.clone()]).unwrap();
        let r1 = ensemble_eval(&e1, "e", 0, &[], &d, Norm::Linf, &grid, &suite, 9).unwrap();
        assert_eq!(r1.whitebox_fail[0], solo);
        let e2 = Ensemble::new(vec![m.clone(), m.clone()]).unwrap();
        let r2 = ensemble_eval(&e2, "e", 0, &[], &d, Norm::Linf, &grid, &suite, 9).unwrap();
        assert_eq!(r2.whitebox_fail[0], solo);
        let clean = 100.0 * (0..d.len()).filter(|&i| !solo[i][0]).count() as f64 / d.len() as f64;
        assert_eq!(r2.report.models[0].combined_rob[0], clean);
    }

    #[test]
    fn mismatched_zoo_rejected() {
        let a = DenseModel::init(&[2, 4, 2], 0).unwrap();
        let b = DenseModel::init(&[3, 4, 2], 0).unwrap();
        let suite = AttackSuite::standard(2).unwrap();
        let r = combined_eval(
            &[ZooEntry::new("a", &a, 0), ZooEntry::new("b", &b, 1)],
            &data(),
            Norm::L2,
            &[0.1],
            &suite,
            0,
        );
        assert!(matches!(r, Err(Error::Argument(_))));
    }
}
