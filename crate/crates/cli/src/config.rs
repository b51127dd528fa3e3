//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mma::attacks::Norm;
use mma::evaluation::{AttackSpec, AttackSuite};
use mma::theory::TheoryConfig;
use mma::training::TrainConfig;

/// A config error together with the dotted path of the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key `{}`: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSpec {
    /// Gaussian blobs; class `i mod len(centers)` per example unless
    /// `labels` maps centers to classes.
    Blobs {
        centers: Vec<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<usize>>,
        sigma: f64,
        train: usize,
        test: usize,
        #[serde(default)]
        standardize: bool,
    },
    /// MNIST in IDX format; the leading `train` / `test` examples are used.
    Mnist {
        dir: PathBuf,
        #[serde(default)]
        train: Option<usize>,
        #[serde(default)]
        test: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    /// Load parameters from this checkpoint instead of training.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    pub train: TrainConfig,
}

fn default_restarts() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    pub norm: Norm,
    pub eps: Vec<f64>,
    /// Restarts N of the standard suite (half CE, half CW).
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Explicit attack families; replaces the standard suite.
    #[serde(default)]
    pub attacks: Option<Vec<AttackSpec>>,
    /// Evaluate on the leading test examples only.
    #[serde(default)]
    pub examples: Option<usize>,
    /// Write per-attack transcripts.
    #[serde(default)]
    pub transcripts: bool,
}

impl EvalSpec {
    pub fn suite(&self) -> AttackSuite {
        match &self.attacks {
            Some(a) => AttackSuite { attacks: a.clone() },
            None => AttackSuite::standard(self.restarts).expect("validated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginSpec {
    /// Largest magnitude searched; defaults to twice the largest eps.
    #[serde(default)]
    pub eps_max: Option<f64>,
    #[serde(default)]
    pub examples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` overrides.
    #[serde(default)]
    pub out: Option<PathBuf>,
    pub data: DataSpec,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelSpec>,
    pub evaluation: EvalSpec,
    #[serde(default)]
    pub margins: Option<MarginSpec>,
    #[serde(default)]
    pub theory: Option<TheoryConfig>,
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        err(if path == "." { String::new() } else { path }, inner.message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Read a config file, resolving relative paths inside it against the
/// file's directory.
pub fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let DataSpec::Mnist { dir, .. } = &mut cfg.data {
        resolve(dir);
    }
    for m in &mut cfg.models {
        if let Some(c) = &mut m.checkpoint {
            resolve(c);
        }
    }
    if let Some(o) = &mut cfg.out {
        resolve(o);
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match &self.data {
            DataSpec::Blobs {
                centers,
                labels,
                sigma,
                train,
                test,
                ..
            } => {
                if centers.len() < 2 {
                    return Err(err("data.centers", "need at least two centers"));
                }
                let d = centers[0].len();
                if d == 0 || centers.iter().any(|c| c.len() != d) {
                    return Err(err("data.centers", "centers must share a positive dimension"));
                }
                if let Some(l) = labels {
                    if l.len() != centers.len() {
                        return Err(err("data.labels", "one label per center"));
                    }
                }
                if !(*sigma >= 0.0) {
                    return Err(err("data.sigma", "must be >= 0"));
                }
                if *train == 0 {
                    return Err(err("data.train", "must be positive"));
                }
                if *test == 0 {
                    return Err(err("data.test", "must be positive"));
                }
            }
            DataSpec::Mnist { train, test, .. } => {
                if *train == Some(0) {
                    return Err(err("data.train", "must be positive"));
                }
                if *test == Some(0) {
                    return Err(err("data.test", "must be positive"));
                }
            }
        }
        if self.models.is_empty() {
            return Err(err("model", "at least one [[model]] is required"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
                return Err(err(format!("model[{i}].name"), "use letters, digits, `-`, `_` or `.`"));
            }
            if self.models[..i].iter().any(|o| o.name == m.name) {
                return Err(err(format!("model[{i}].name"), format!("duplicate model name `{}`", m.name)));
            }
            if let Err(e) = m.train.validate() {
                let msg = e.to_string();
                let msg = msg.strip_prefix("invalid argument: ").unwrap_or(&msg).to_string();
                return Err(match msg.split_once(": ") {
                    Some((key, rest)) if key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                        err(format!("model[{i}].train.{key}"), rest)
                    }
                    _ => err(format!("model[{i}].train"), msg),
                });
            }
        }
        let ev = &self.evaluation;
        if ev.eps.is_empty() {
            return Err(err("evaluation.eps", "grid is empty"));
        }
        if ev.eps.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(err("evaluation.eps", "values must be finite and >= 0"));
        }
        if ev.eps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(err("evaluation.eps", "grid must be strictly increasing"));
        }
        match &ev.attacks {
            None => {
                if ev.restarts == 0 || ev.restarts % 2 != 0 {
                    return Err(err("evaluation.restarts", "must be even and positive"));
                }
            }
            Some(a) => {
                if let Err(e) = (AttackSuite { attacks: a.clone() }).validate() {
                    return Err(err("evaluation.attacks", e.to_string()));
                }
            }
        }
        if ev.examples == Some(0) {
            return Err(err("evaluation.examples", "must be positive"));
        }
        if let Some(m) = &self.margins {
            if let Some(e) = m.eps_max {
                if !(e > 0.0) {
                    return Err(err("margins.eps_max", "must be positive"));
                }
            }
            if m.examples == Some(0) {
                return Err(err("margins.examples", "must be positive"));
            }
        }
        if let Some(t) = &self.theory {
            if t.grid_n < 16 {
                return Err(err("theory.grid_n", "must be at least 16"));
            }
            if t.required > t.instances {
                return Err(err("theory.required", "cannot exceed theory.instances"));
            }
        }
        Ok(())
    }

    /// Snapshot written next to the outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[data]
kind = "blobs"
centers = [[0.0, 0.0], [2.0, 0.0]]
sigma = 0.2
train = 100
test = 50

[[model]]
name = "std"
train = { method = "std", norm = "l2", epochs = 5, optimizer = { kind = "adam", lr = 0.01 } }

[evaluation]
norm = "l2"
eps = [0.5, 1.0]
"#;

    #[test]
    fn minimal_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.evaluation.restarts, 10);
        let s = c.evaluation.suite();
        assert_eq!(s.total_restarts(), 10);
        assert!(s.attacks.iter().all(|a| a.steps == 100 && a.step_scale.is_none()));
        assert_eq!(c.models[0].train.batch_size, 50);
        assert_eq!(c.models[0].train.attack_steps, 10);
    }

    #[test]
    fn decreasing_grid_rejected() {
        let t = MINIMAL.replace("eps = [0.5, 1.0]", "eps = [8.0, 4.0]");
        let e = parse_config(&t).unwrap_err();
        assert_eq!(e.path, "evaluation.eps");
        assert!(e.message.contains("increasing"));
    }

    #[test]
    fn mma_without_d_max_rejected() {
        let t = MINIMAL.replace("method = \"std\"", "method = \"mma\"");
        let e = parse_config(&t).unwrap_err();
        assert_eq!(e.path, "model[0].train.d_max");
    }

    #[test]
    fn unknown_key_names_path() {
        let t = MINIMAL.replace("sigma = 0.2", "sigma = 0.2\nsgima = 1.0");
        let e = parse_config(&t).unwrap_err();
        assert!(e.message.contains("sgima"), "{e}");
        let t = MINIMAL.replace("epochs = 5", "epochs = 5, epoch = 2");
        let e = parse_config(&t).unwrap_err();
        assert!(e.path.starts_with("model"), "{e}");
        assert!(e.message.contains("epoch"), "{e}");
    }

    #[test]
    fn odd_restarts_rejected() {
        let t = MINIMAL.replace("eps = [0.5, 1.0]", "eps = [0.5, 1.0]\nrestarts = 3");
        assert_eq!(parse_config(&t).unwrap_err().path, "evaluation.restarts");
    }

    #[test]
    fn bad_enum_rejected() {
        let t = MINIMAL.replace("norm = \"l2\"\neps", "norm = \"l3\"\neps");
        let e = parse_config(&t).unwrap_err();
        assert_eq!(e.path, "evaluation.norm");
    }

    #[test]
    fn snapshot_roundtrips() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}
