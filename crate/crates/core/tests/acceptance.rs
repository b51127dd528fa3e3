//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p mma-core --test acceptance`. Set
//! `ACCEPTANCE_ONLY=2,3,7` to run a subset. The MNIST criterion reads IDX
//! files from `MMA_MNIST_DIR` (default `data/mnist` at the workspace root).

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mma::attacks::{Norm, PerturbationBudget};
use mma::data::{gen_blobs_labeled, load_mnist_idx, Dataset};
use mma::evaluation::{combined_eval, compute_metrics, AttackSuite, EvalOutput, ZooEntry};
use mma::exec;
use mma::losses::loss_and_grad;
use mma::margin::{brute_force_margin, estimate_margin, linear_margin_analytic, MarginConfig};
use mma::numerics::{finite_diff_slice, OptimizerSpec, ParamGrads};
use mma::theory::{self, TheoryConfig};
use mma::training::{train, train_pgd, train_pgdls, Method, TrainConfig};
use mma::{seed, Classifier, DenseModel, LossKind};

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;

fn rng(tag: u64, i: usize) -> ChaCha8Rng {
    seed::rng(seed::derive(2024, &[tag, i as u64]))
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

// 1 -------------------------------------------------------------------------

fn near_kink(m: &DenseModel, x: &[f64], y: usize, kind: LossKind) -> bool {
    let t = m.trace(x);
    if t.hidden_preactivations().any(|z| z.iter().any(|v| v.abs() < 1e-3)) {
        return true;
    }
    let z = t.logits();
    let mut others: Vec<f64> = z.iter().enumerate().filter(|(j, _)| *j != y).map(|(_, v)| *v).collect();
    others.sort_by(|a, b| b.total_cmp(a));
    let lm = others[0] - z[y];
    let tie = others.len() > 1 && others[0] - others[1] < 1e-3;
    matches!(kind, LossKind::Lm | LossKind::Cw) && (tie || lm.abs() < 1e-3)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / (y.abs() + 1e-9))
        .filter(|e| e.is_finite())
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let kinds = [LossKind::Ce, LossKind::Slm, LossKind::Lm, LossKind::Cw];
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut done = 0;
    let mut i = 0;
    while done < 100 {
        let mut r = rng(1, i);
        i += 1;
        let d = r.gen_range(1..6);
        let hidden: Vec<usize> = (0..r.gen_range(1..3)).map(|_| r.gen_range(2..9)).collect();
        let k = [2usize, 3, 10][r.gen_range(0..3)];
        let mut widths = vec![d];
        widths.extend(&hidden);
        widths.push(k);
        let m = DenseModel::init(&widths, r.gen())?;
        let x: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
        let y = r.gen_range(0..k);
        let kind = kinds[done % 4];
        if near_kink(&m, &x, y, kind) {
            continue;
        }
        done += 1;
        let t = m.trace(&x);
        let (_, up) = loss_and_grad(kind, t.logits(), y)?;
        let mut pg = ParamGrads::zeros_like(&m);
        let gx = m.pullback(&t, &up, Some(&mut pg), true).expect("input gradient requested");
        let theta = m.params_flat();
        let fd_theta = finite_diff_slice(
            |p| {
                let mut mm = m.clone();
                mm.set_params_flat(p).expect("same length");
                mm.loss(kind, &x, y).expect("valid label")
            },
            &theta,
            h,
        )?;
        let fd_x = finite_diff_slice(|xx| m.loss(kind, xx, y).expect("valid label"), &x, h)?;
        let e = rel_err(&pg.flat(), &fd_theta).max(rel_err(&gx, &fd_x));
        worst = worst.max(e);
        if e > 1e-4 {
            failures += 1;
        }
    }
    Ok(verdict(
        failures == 0,
        format!("100 triples, {failures} over rtol 1e-4, worst {worst:.2e}"),
    ))
}

// 2 - 4, 6 ------------------------------------------------------------------

fn theory_cfg() -> TheoryConfig {
    TheoryConfig::default()
}

fn criterion_2() -> Outcome {
    let mut cfg = theory_cfg();
    // Logit identities only; the margin part runs under criterion 6's budget.
    cfg.instances = 0;
    cfg.required = 0;
    let r = theory::check_lm_slm_sandwich(&cfg)?;
    Ok(verdict(r.ok, r.to_string()))
}

fn criterion_3() -> Outcome {
    let r = theory::check_ce_slm_collinearity(&theory_cfg())?;
    Ok(verdict(r.ok, r.to_string()))
}

fn criterion_4() -> Outcome {
    let cfg = theory_cfg();
    let a = theory::check_margin_gradient(&cfg)?;
    let b = theory::check_loss_descent_grows_margin(&cfg)?;
    Ok(verdict(a.ok && b.ok, format!("{a}; {b}")))
}

fn criterion_6() -> Outcome {
    let cfg = theory_cfg();
    let a = theory::check_min_max_duality(&cfg)?;
    let b = theory::check_fixed_eps_lower_bound(&cfg)?;
    let c = theory::check_lm_slm_sandwich(&cfg)?;
    Ok(verdict(a.ok && b.ok && c.ok, format!("{a}; {b}; margin sandwich {}/{}", c.passed, c.total)))
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (ni, norm) in [Norm::L2, Norm::Linf].into_iter().enumerate() {
        let errs = exec::try_map_indexed(50, |i| -> mma::Result<f64> {
            let mut r = rng(50 + ni as u64, i);
            loop {
                let d = r.gen_range(2..11);
                let w: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
                let b = normal(&mut r);
                let x: Vec<f64> = (0..d).map(|_| normal(&mut r)).collect();
                let truth = linear_margin_analytic(&w, b, &x, norm)?;
                if !(0.1..3.0).contains(&truth) {
                    continue;
                }
                let m = DenseModel::binary_linear(&w, b)?;
                let y = m.predict(&x);
                let budget = PerturbationBudget::new(norm, 6.0)?;
                let e = estimate_margin(&m, &x, y, &budget, &MarginConfig::new(1.0, 6.0), r.gen())?;
                return Ok(if e.successful { (e.value - truth).abs() / truth } else { f64::INFINITY });
            }
        })?;
        let worst = errs.iter().copied().fold(0.0, f64::max);
        let bad = errs.iter().filter(|e| **e > 0.02).count();
        ok &= bad == 0;
        lines.push(format!("linear {}: {bad}/50 over 2%, worst {:.2}%", norm.name(), 100.0 * worst));
    }
    for (ni, norm) in [Norm::L2, Norm::Linf].into_iter().enumerate() {
        let errs = exec::try_map_indexed(50, |i| -> mma::Result<f64> {
            let mut r = rng(52 + ni as u64, i);
            loop {
                let k = r.gen_range(2..4);
                let m = DenseModel::init(&[2, 16, k], r.gen())?;
                let x = vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
                let y = m.predict(&x);
                let truth = brute_force_margin(&m, &x, y, norm, 3.0, 256)?;
                if !(0.05..2.0).contains(&truth) {
                    continue;
                }
                let budget = PerturbationBudget::new(norm, 3.0)?;
                let e = estimate_margin(&m, &x, y, &budget, &MarginConfig::new(0.5, 3.0), r.gen())?;
                return Ok(if e.successful { (e.value - truth).abs() / truth } else { f64::INFINITY });
            }
        })?;
        let worst = errs.iter().copied().fold(0.0, f64::max);
        let bad = errs.iter().filter(|e| **e > 0.05).count();
        ok &= bad == 0;
        lines.push(format!("2-layer {}: {bad}/50 over 5%, worst {:.2}%", norm.name(), 100.0 * worst));
    }
    Ok(verdict(ok, lines.join("; ")))
}

// 7 -------------------------------------------------------------------------

/// CIFAR10 Linf table: name, clean, AvgAcc, AvgRobAcc, robust accuracy at
/// eps = 4, 8, ..., 32 (/255).
#[allow(clippy::approx_constant)]
const TABLE: &[(&str, [f64; 11])] = &[
    ("PGD-8", [85.14, 27.27, 20.03, 67.73, 46.47, 26.63, 12.33, 4.69, 1.56, 0.62, 0.22]),
    ("PGD-16", [68.86, 28.28, 23.21, 57.99, 46.09, 33.64, 22.73, 13.37, 7.01, 3.32, 1.54]),
    ("PGD-24", [10.90, 9.95, 9.83, 10.60, 10.34, 10.11, 10.00, 9.89, 9.69, 9.34, 8.68]),
    ("PGDLS-8", [85.63, 27.20, 19.90, 67.96, 46.19, 26.19, 12.22, 4.51, 1.48, 0.44, 0.21]),
    ("PGDLS-16", [70.68, 28.44, 23.16, 59.43, 47.00, 33.64, 21.72, 12.66, 6.54, 2.98, 1.31]),
    ("PGDLS-24", [58.36, 26.53, 22.55, 49.05, 41.13, 32.10, 23.76, 15.70, 9.66, 5.86, 3.11]),
    ("MMA-12", [88.59, 26.87, 19.15, 67.96, 43.42, 24.07, 11.45, 4.27, 1.43, 0.45, 0.16]),
    ("MMA-20", [86.56, 28.86, 21.65, 66.92, 46.89, 29.83, 16.55, 8.14, 3.25, 1.17, 0.43]),
    ("MMA-32", [84.36, 29.39, 22.51, 64.82, 47.18, 31.49, 18.91, 10.16, 4.77, 1.97, 0.81]),
    ("PGD-ens", [87.38, 28.10, 20.69, 64.59, 46.95, 28.88, 15.10, 6.35, 2.35, 0.91, 0.39]),
    ("PGDLS-ens", [76.73, 29.52, 23.62, 60.52, 48.21, 35.06, 22.14, 12.28, 6.17, 3.14, 1.43]),
    ("TRADES", [84.92, 30.46, 23.65, 70.96, 52.92, 33.04, 18.23, 8.34, 3.57, 1.4, 0.69]),
];

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for (name, row) in TABLE {
        let (avg, rob) = compute_metrics(row[0], &row[3..])?;
        let e = (avg - row[1]).abs().max((rob - row[2]).abs());
        worst = worst.max(e);
        if e > 0.01 {
            bad.push(*name);
        }
    }
    Ok(verdict(
        bad.is_empty(),
        format!("{} rows, worst deviation {worst:.4}, failing {bad:?}", TABLE.len()),
    ))
}

// Shared evaluation bookkeeping for criterion 11 -----------------------------

#[derive(Default)]
struct Protocol {
    reports: Vec<(String, EvalOutput)>,
    reruns_identical: Vec<(String, bool)>,
}

fn eval_zoo(models: &[(&str, &DenseModel)], data: &Dataset, norm: Norm, grid: &[f64], n: usize, seed: u64) -> mma::Result<EvalOutput> {
    let zoo: Vec<ZooEntry<'_>> = models
        .iter()
        .enumerate()
        .map(|(i, (name, m))| ZooEntry::new(name, *m as &dyn Classifier, i as u64))
        .collect();
    combined_eval(&zoo, data, norm, grid, &AttackSuite::standard(n)?, seed)
}

fn report_bytes(out: &EvalOutput) -> mma::Result<Vec<u8>> {
    let mut b = Vec::new();
    out.report.write_csv(&mut b)?;
    b.extend(out.report.to_json()?.into_bytes());
    Ok(b)
}

// 8 -------------------------------------------------------------------------

const D_MAX_8: f64 = 1.0;

/// Two classes on a line with uneven gaps: a class-1 cluster at the origin
/// faces a small class-0 cluster only 1.12 away, while the remaining
/// clusters are several units apart.
fn blobs_8(n: usize, seed: u64) -> mma::Result<Dataset> {
    let centers = vec![vec![-3.0, 0.0], vec![-3.0, 0.0], vec![0.0, 0.0], vec![1.12, 0.0], vec![4.2, 0.0]];
    gen_blobs_labeled(n, &centers, &[1, 1, 1, 0, 0], 0.05, seed)
}

fn cfg_8(method: Method, seed: u64) -> TrainConfig {
    let epochs = 60;
    let mut c = TrainConfig::new(method, Norm::L2, OptimizerSpec::adam(0.01), epochs)
        .with_hidden(&[32])
        .with_seed(seed);
    c.lr_schedule = vec![(0, 0.01), (epochs / 2, 0.001)];
    match method {
        Method::Pgd => c.with_eps(D_MAX_8),
        _ => c.with_d_max(D_MAX_8),
    }
}

struct Run8 {
    line: String,
    ok: bool,
    bytes: Vec<u8>,
    eval: EvalOutput,
}

fn run_8(seed: u64) -> mma::Result<Run8> {
    let data = blobs_8(400, seed)?;
    let pgd = train_pgd(&data, &cfg_8(Method::Pgd, seed))?;
    let mma_model = train(&data, &cfg_8(Method::Mma, seed))?.model;
    let mut line = format!("seed {seed}:");
    let mut fracs = Vec::new();
    let mut accs = Vec::new();
    for (name, m) in [("pgd", &pgd), ("mma", &mma_model)] {
        let margins = exec::try_map_indexed(data.len(), |i| {
            brute_force_margin(m, data.input(i), data.label(i), Norm::L2, 2.0 * D_MAX_8, 256)
        })?;
        let small = margins.iter().filter(|v| **v < 0.05 * D_MAX_8).count();
        let hits = (0..data.len()).filter(|&i| m.predict(data.input(i)) == data.label(i)).count();
        let frac = 100.0 * small as f64 / data.len() as f64;
        let acc = 100.0 * hits as f64 / data.len() as f64;
        line += &format!(" {name} acc {acc:.1}% small-margin {frac:.1}%");
        fracs.push(frac);
        accs.push(acc);
    }
    let ok = fracs[0] - fracs[1] >= 10.0 && accs.iter().all(|a| *a >= 90.0);
    let test = blobs_8(200, seed + 100)?;
    let eval = eval_zoo(&[("pgd", &pgd), ("mma", &mma_model)], &test, Norm::L2, &[0.25, 0.5, 0.75, 1.0], 4, seed)?;
    let mut bytes = mma::numerics::checkpoint::encode(&pgd);
    bytes.extend(mma::numerics::checkpoint::encode(&mma_model));
    bytes.extend(report_bytes(&eval)?);
    Ok(Run8 { line, ok, bytes, eval })
}

fn criterion_8(p: &mut Protocol) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in 0..3 {
        let r = run_8(s)?;
        ok &= r.ok;
        lines.push(r.line);
        if s == 0 {
            let again = exec::serial_scope(|| run_8(0))?;
            p.reruns_identical.push(("blobs margin experiment (serial rerun)".into(), again.bytes == r.bytes));
        }
        p.reports.push((format!("criterion 8 seed {s}"), r.eval));
    }
    Ok(verdict(ok, lines.join("; ")))
}

// 9 -------------------------------------------------------------------------

/// Five classes evenly spaced on a circle, neighbours 1.0 apart.
fn blobs_9(seed: u64) -> mma::Result<Dataset> {
    let k = 5;
    let radius = 1.0 / (2.0 * (std::f64::consts::PI / k as f64).sin());
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vec![radius * a.cos(), radius * a.sin()]
        })
        .collect();
    let labels: Vec<usize> = (0..k).collect();
    gen_blobs_labeled(250, &centers, &labels, 0.12, seed)
}

fn criterion_9(p: &mut Protocol) -> Outcome {
    // Twice the half-gap between neighbouring classes.
    let eps = 1.1;
    let epochs = 40;
    let mut wins = 0;
    let mut lines = Vec::new();
    for s in 0..3u64 {
        let data = blobs_9(s)?;
        let mut c = TrainConfig::new(Method::Pgd, Norm::L2, OptimizerSpec::adam(0.01), epochs)
            .with_eps(eps)
            .with_hidden(&[32])
            .with_seed(s);
        c.lr_schedule = vec![(0, 0.01), (epochs / 2, 1e-4)];
        let pgd = train_pgd(&data, &c)?;
        c.method = Method::Pgdls;
        let pgdls = train_pgdls(&data, &c)?;
        let acc = |m: &DenseModel| {
            100.0 * (0..data.len()).filter(|&i| m.predict(data.input(i)) == data.label(i)).count() as f64 / data.len() as f64
        };
        let (a, b) = (acc(&pgd), acc(&pgdls));
        if a <= 60.0 && b >= 90.0 {
            wins += 1;
        }
        lines.push(format!("seed {s}: pgd {a:.1}% pgdls {b:.1}%"));
        let eval = eval_zoo(&[("pgd", &pgd), ("pgdls", &pgdls)], &blobs_9(s + 100)?.take(100)?, Norm::L2, &[0.2, 0.4], 2, s)?;
        p.reports.push((format!("criterion 9 seed {s}"), eval));
    }
    Ok(verdict(wins >= 2, format!("{wins}/3 seeds; {}", lines.join("; "))))
}

// 10 ------------------------------------------------------------------------

fn mnist_dir() -> PathBuf {
    std::env::var_os("MMA_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist_cfg(method: Method) -> TrainConfig {
    let epochs = 40;
    let mut c = TrainConfig::new(method, Norm::Linf, OptimizerSpec::adam(1e-3), epochs)
        .with_hidden(&[128])
        .with_seed(seed::derive(0, &[method as u64]));
    c.lr_schedule = vec![(0, 1e-3), (30, 1e-4)];
    if method == Method::Mma {
        c = c.with_d_max(0.45);
    }
    c
}

fn criterion_10(p: &mut Protocol) -> Outcome {
    let dir = mnist_dir();
    let train_data = load_mnist_idx(&dir.join("train-images-idx3-ubyte"), &dir.join("train-labels-idx1-ubyte"), Some(2000))?;
    let test = load_mnist_idx(&dir.join("test-images-idx3-ubyte"), &dir.join("test-labels-idx1-ubyte"), Some(500))?;
    let std_model = train(&train_data, &mnist_cfg(Method::Std))?.model;
    let mma_model = train(&train_data, &mnist_cfg(Method::Mma))?.model;
    let grid = [0.05, 0.1, 0.2, 0.3];
    let zoo = [("std", &std_model), ("mma-0.45", &mma_model)];
    let eval = eval_zoo(&zoo, &test, Norm::Linf, &grid, 4, 0)?;
    let r = &eval.report.models;
    let (s, m) = (&r[0], &r[1]);
    let gain = m.combined_rob[1] - s.combined_rob[1];
    let ok = gain >= 20.0 && m.clean_acc >= 90.0;
    let detail = format!(
        "clean std {:.2}% mma {:.2}%; combined robust at 0.1: std {:.2}% mma {:.2}% (gain {gain:.2} pp)",
        s.clean_acc, m.clean_acc, s.combined_rob[1], m.combined_rob[1]
    );
    let sub = test.take(100)?;
    let a = report_bytes(&eval_zoo(&zoo, &sub, Norm::Linf, &grid, 2, 7)?)?;
    let b = report_bytes(&exec::serial_scope(|| eval_zoo(&zoo, &sub, Norm::Linf, &grid, 2, 7))?)?;
    p.reruns_identical.push(("mnist evaluation (serial rerun)".into(), a == b));
    p.reports.push(("criterion 10".into(), eval));
    Ok(verdict(ok, detail))
}

// 11 ------------------------------------------------------------------------

fn criterion_11(p: &Protocol) -> Outcome {
    if p.reports.is_empty() {
        return Ok(verdict(false, "no evaluations ran (criteria 8-10 skipped)"));
    }
    let mut problems = Vec::new();
    let mut cells = 0;
    for (name, out) in &p.reports {
        let rep = &out.report;
        if rep.invariant_violations > 0 {
            problems.push(format!("{name}: {} ball/box violations", rep.invariant_violations));
        }
        for m in &rep.models {
            for e in 0..rep.eps_grid.len() {
                cells += 1;
                if m.transfer_gap[e] < 0.0 {
                    problems.push(format!("{name}/{}: negative transfer gap", m.name));
                }
                if m.combined_rob[e] > m.whitebox_rob[e] {
                    problems.push(format!("{name}/{}: combined above whitebox", m.name));
                }
            }
        }
        for (mi, per_model) in out.combined_fail.iter().enumerate() {
            for (ci, per_ex) in per_model.iter().enumerate() {
                for (e, &f) in per_ex.iter().enumerate() {
                    if out.whitebox_fail[mi][ci][e] && !f {
                        problems.push(format!("{name}: whitebox failure missing from combined"));
                    }
                }
            }
        }
    }
    for (name, same) in &p.reruns_identical {
        if !same {
            problems.push(format!("{name}: rerun differs"));
        }
    }
    problems.dedup();
    Ok(verdict(
        problems.is_empty(),
        format!(
            "{} evaluations, {cells} model/eps cells, {} byte-identical rerun checks; {}",
            p.reports.len(),
            p.reruns_identical.len(),
            if problems.is_empty() { "no violations".to_string() } else { problems.join("; ") }
        ),
    ))
}

// ---------------------------------------------------------------------------

fn main() {
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let wanted = |n: u32| only.as_ref().map_or(true, |o| o.contains(&n));
    let mut protocol = Protocol::default();
    let mut failed = 0;
    let mut run = |n: u32, name: &str, budget: Duration, f: &mut dyn FnMut() -> Outcome| {
        if !wanted(n) {
            return;
        }
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let (ok, detail) = match out {
            Ok(v) => (v.ok && el <= budget, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {name}: {} ({:.1}s of {}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            budget.as_secs()
        );
    };
    let s = Duration::from_secs;
    run(1, "gradient correctness", s(30), &mut criterion_1);
    run(2, "lm/slm sandwich", s(1), &mut criterion_2);
    run(3, "ce/slm collinearity", s(30), &mut criterion_3);
    run(4, "margin gradient", s(120), &mut criterion_4);
    run(5, "an-pgd accuracy", s(120), &mut criterion_5);
    run(6, "min-max duality and lower bound", s(180), &mut criterion_6);
    run(7, "metric arithmetic", s(1), &mut criterion_7);
    run(8, "margin dynamics", s(600), &mut || criterion_8(&mut protocol));
    run(9, "pgd collapse and pgdls rescue", s(600), &mut || criterion_9(&mut protocol));
    run(10, "mnist subset", s(1800), &mut || criterion_10(&mut protocol));
    if wanted(11) {
        let t = Instant::now();
        let (ok, detail) = match criterion_11(&protocol) {
            Ok(v) => (v.ok, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion 11 protocol invariants: {} ({:.1}s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
