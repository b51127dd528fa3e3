//! Experiment execution: data, model zoo, evaluation and artifact output.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use mma::attacks::{write_transcript, PerturbationBudget};
use mma::data::{gen_blobs, gen_blobs_labeled, load_mnist_idx, standardize, Dataset};
use mma::evaluation::{combined_eval, EvalOutput, ZooEntry};
use mma::margin::{estimate_margin, MarginConfig};
use mma::numerics::checkpoint;
use mma::theory::{run_all, CheckReport};
use mma::training::{train, MarginTraceRow, TrainOutcome};
use mma::{seed, Classifier, DenseModel};

use crate::config::{DataSpec, ExperimentConfig};

/// Seed streams owned by the runner.
mod stream {
    pub const MODEL: u64 = 101;
    pub const TRAIN_DATA: u64 = 102;
    pub const TEST_DATA: u64 = 103;
    pub const MARGINS: u64 = 104;
}

/// An output directory that never overwrites an existing run: a numeric
/// suffix is appended when the requested path already holds files.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(requested: &Path) -> Result<Self> {
        let mut root = requested.to_path_buf();
        let mut k = 1;
        while root.exists() && std::fs::read_dir(&root).map(|mut d| d.next().is_some()).unwrap_or(true) {
            let name = requested.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            root = requested.with_file_name(format!("{name}-{k}"));
            k += 1;
        }
        std::fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    fn target(&self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        Ok(p)
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let p = self.target(rel)?;
        std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_csv<T: Serialize>(&self, rel: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        self.write(rel, &w.into_inner()?)
    }
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    match &cfg.data {
        DataSpec::Blobs {
            centers,
            labels,
            sigma,
            train,
            test,
            standardize: st,
        } => {
            let gen = |n: usize, s: u64| match labels {
                Some(l) => gen_blobs_labeled(n, centers, l, *sigma, s),
                None => gen_blobs(n, centers, *sigma, s),
            };
            let tr = gen(*train, seed::derive(cfg.seed, &[stream::TRAIN_DATA]))?;
            let te = gen(*test, seed::derive(cfg.seed, &[stream::TEST_DATA]))?;
            if *st {
                let (tr, s) = standardize(&tr)?;
                let te = s.apply(&te)?;
                Ok((tr, te))
            } else {
                Ok((tr, te))
            }
        }
        DataSpec::Mnist { dir, train, test } => {
            let tr = load_mnist_idx(
                &dir.join("train-images-idx3-ubyte"),
                &dir.join("train-labels-idx1-ubyte"),
                *train,
            )?;
            let prefix = if dir.join("t10k-images-idx3-ubyte").exists() { "t10k" } else { "test" };
            let te = load_mnist_idx(
                &dir.join(format!("{prefix}-images-idx3-ubyte")),
                &dir.join(format!("{prefix}-labels-idx1-ubyte")),
                *test,
            )?;
            Ok((tr, te))
        }
    }
}

pub struct ZooModel {
    pub name: String,
    pub model: DenseModel,
    pub outcome: Option<TrainOutcome>,
}

/// Train, or load from checkpoint, every configured model in order.
pub fn build_zoo(cfg: &ExperimentConfig, train_data: &Dataset) -> Result<Vec<ZooModel>> {
    let mut zoo = Vec::new();
    for (i, spec) in cfg.models.iter().enumerate() {
        let started = std::time::Instant::now();
        let entry = match &spec.checkpoint {
            Some(path) => {
                let model = checkpoint::load(path)?;
                if model.input_dim() != train_data.dim() || model.num_classes() != train_data.num_classes() {
                    bail!("checkpoint {} does not match the dataset dimensions", path.display());
                }
                ZooModel {
                    name: spec.name.clone(),
                    model,
                    outcome: None,
                }
            }
            None => {
                let mut tc = spec.train.clone();
                tc.seed = seed::derive(cfg.seed, &[stream::MODEL, i as u64]);
                let out = train(train_data, &tc).with_context(|| format!("training model `{}`", spec.name))?;
                ZooModel {
                    name: spec.name.clone(),
                    model: out.model.clone(),
                    outcome: Some(out),
                }
            }
        };
        eprintln!("model {} ready in {:.1}s", spec.name, started.elapsed().as_secs_f64());
        zoo.push(entry);
    }
    Ok(zoo)
}

fn write_models(dir: &RunDir, zoo: &[ZooModel]) -> Result<()> {
    for z in zoo {
        dir.write(&format!("checkpoints/{}.bin", z.name), &checkpoint::encode(&z.model))?;
        if let Some(o) = &z.outcome {
            dir.write_csv(&format!("history/{}.csv", z.name), &o.history)?;
            if !o.margin_trace.is_empty() {
                let t: &[MarginTraceRow] = &o.margin_trace;
                dir.write_csv(&format!("margin_traces/{}.csv", z.name), t)?;
            }
        }
    }
    Ok(())
}

fn eval_data(cfg: &ExperimentConfig, test: &Dataset) -> Result<Dataset> {
    Ok(match cfg.evaluation.examples {
        Some(n) if n < test.len() => test.take(n)?,
        _ => test.clone(),
    })
}

/// Whitebox and transfer evaluation of the whole zoo.
pub fn evaluate_zoo(cfg: &ExperimentConfig, zoo: &[ZooModel], data: &Dataset) -> Result<EvalOutput> {
    let entries: Vec<ZooEntry<'_>> = zoo
        .iter()
        .enumerate()
        .map(|(i, z)| ZooEntry::new(&z.name, &z.model as &dyn Classifier, i as u64))
        .collect();
    let ev = &cfg.evaluation;
    Ok(combined_eval(&entries, data, ev.norm, &ev.eps, &ev.suite(), cfg.seed)?)
}

/// `train`: fit the zoo and write checkpoints, histories and margin traces.
pub fn cmd_train(cfg: &ExperimentConfig, dir: &RunDir) -> Result<()> {
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    let (train_data, _) = load_data(cfg)?;
    let zoo = build_zoo(cfg, &train_data)?;
    write_models(dir, &zoo)
}

/// `evaluate`: the full experiment. Trains or loads the zoo, runs the
/// combined evaluation and writes the report.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &RunDir) -> Result<EvalOutput> {
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    let (train_data, test) = load_data(cfg)?;
    let zoo = build_zoo(cfg, &train_data)?;
    write_models(dir, &zoo)?;
    let data = eval_data(cfg, &test)?;
    let started = std::time::Instant::now();
    let out = evaluate_zoo(cfg, &zoo, &data)?;
    eprintln!("evaluation done in {:.1}s", started.elapsed().as_secs_f64());
    let mut csv = Vec::new();
    out.report.write_csv(&mut csv)?;
    dir.write("report.csv", &csv)?;
    dir.write("report.json", out.report.to_json()?.as_bytes())?;
    if cfg.evaluation.transcripts {
        for (z, rows) in zoo.iter().zip(&out.transcripts) {
            let mut buf = Vec::new();
            write_transcript(rows, &mut buf)?;
            dir.write(&format!("transcripts/{}.csv", z.name), &buf)?;
        }
    }
    if out.report.invariant_violations > 0 {
        bail!(
            "{} attack results left the perturbation ball or input box",
            out.report.invariant_violations
        );
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct MarginRow {
    pub model: String,
    pub example: usize,
    pub label: usize,
    pub margin: f64,
    pub successful: bool,
}

/// `margins`: adaptive-norm margin estimates of every model on the
/// evaluation examples.
pub fn cmd_margins(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Vec<MarginRow>> {
    dir.write("config.toml", cfg.to_toml().as_bytes())?;
    let (train_data, test) = load_data(cfg)?;
    let zoo = build_zoo(cfg, &train_data)?;
    write_models(dir, &zoo)?;
    let spec = cfg.margins.clone().unwrap_or(crate::config::MarginSpec {
        eps_max: None,
        examples: None,
    });
    let data = match spec.examples.or(cfg.evaluation.examples) {
        Some(n) if n < test.len() => test.take(n)?,
        _ => test,
    };
    let norm = cfg.evaluation.norm;
    let eps_max = spec
        .eps_max
        .unwrap_or(2.0 * cfg.evaluation.eps.last().copied().unwrap_or(1.0).max(1e-3));
    let mc = MarginConfig::new(0.5 * eps_max, eps_max);
    let budget = PerturbationBudget::new(norm, eps_max)?.with_box(data.bounds())?;
    let base = seed::derive(cfg.seed, &[stream::MARGINS]);
    let mut rows = Vec::new();
    for (m, z) in zoo.iter().enumerate() {
        let est = mma::exec::try_map_indexed(data.len(), |i| {
            estimate_margin(
                &z.model,
                data.input(i),
                data.label(i),
                &budget,
                &mc,
                seed::derive(base, &[m as u64, i as u64]),
            )
        })?;
        rows.extend(est.into_iter().enumerate().map(|(i, e)| MarginRow {
            model: z.name.clone(),
            example: i,
            label: data.label(i),
            margin: e.value,
            successful: e.successful,
        }));
    }
    dir.write_csv("margins.csv", &rows)?;
    Ok(rows)
}

/// `theory-check`: run the numerical verifications; returns whether all
/// of them passed.
pub fn cmd_theory(cfg: &mma::theory::TheoryConfig, dir: Option<&RunDir>) -> Result<(bool, Vec<CheckReport>)> {
    let reports = run_all(cfg)?;
    for r in &reports {
        println!("{r}");
    }
    if let Some(d) = dir {
        d.write_csv("theory.csv", &reports)?;
    }
    Ok((reports.iter().all(|r| r.ok), reports))
}
