//! Classification losses over logits: cross-entropy, logit margin, soft
//! logit margin and the clipped CW margin.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// `log sum_j exp f_j - f_y`
    Ce,
    /// `max_{j != y} f_j - f_y`; negative iff `y` is the strict argmax.
    Lm,
    /// `log sum_{j != y} exp f_j - f_y`
    Slm,
    /// `min(LM, 0)`
    Cw,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Ce => "ce",
            LossKind::Lm => "lm",
            LossKind::Slm => "slm",
            LossKind::Cw => "cw",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(LossKind::Ce),
            "lm" => Ok(LossKind::Lm),
            "slm" => Ok(LossKind::Slm),
            "cw" => Ok(LossKind::Cw),
            other => Err(Error::argument(format!("unknown loss `{other}`"))),
        }
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

/// Stable `log sum exp` over the entries selected by `keep`.
fn log_sum_exp_where(logits: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    let m = max_of(logits.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, &v)| v));
    let s: f64 = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, &v)| (v - m).exp())
        .sum();
    m + s.ln()
}

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    log_sum_exp_where(logits, |_| true)
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = max_of(logits.iter().copied());
    let e: Vec<f64> = logits.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn check(logits: &[f64], y: usize) -> Result<()> {
    if logits.len() < 2 || y >= logits.len() {
        return Err(Error::Index {
            index: y,
            classes: logits.len(),
        });
    }
    Ok(())
}

/// Largest wrong-class logit index, ties broken by lowest index.
pub fn runner_up(logits: &[f64], y: usize) -> usize {
    let mut best = usize::MAX;
    for (j, &v) in logits.iter().enumerate() {
        if j != y && (best == usize::MAX || v > logits[best]) {
            best = j;
        }
    }
    best
}

fn lm(logits: &[f64], y: usize) -> f64 {
    logits[runner_up(logits, y)] - logits[y]
}

pub fn loss_value(kind: LossKind, logits: &[f64], y: usize) -> Result<f64> {
    check(logits, y)?;
    Ok(match kind {
        LossKind::Ce => log_sum_exp(logits) - logits[y],
        LossKind::Lm => lm(logits, y),
        LossKind::Slm => log_sum_exp_where(logits, |j| j != y) - logits[y],
        LossKind::Cw => lm(logits, y).min(0.0),
    })
}

/// Loss value and its gradient with respect to the logits.
pub fn loss_and_grad(kind: LossKind, logits: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
    check(logits, y)?;
    let k = logits.len();
    let mut g = vec![0.0; k];
    let value = match kind {
        LossKind::Ce => {
            let lse = log_sum_exp(logits);
            for (gj, &v) in g.iter_mut().zip(logits) {
                *gj = (v - lse).exp();
            }
            // p_y - 1 == -r; the latter avoids cancellation when p_y ~ 1.
            g[y] = -ce_slm_ratio_unchecked(logits, y);
            lse - logits[y]
        }
        LossKind::Slm => {
            let lse = log_sum_exp_where(logits, |j| j != y);
            for (j, (gj, &v)) in g.iter_mut().zip(logits).enumerate() {
                if j != y {
                    *gj = (v - lse).exp();
                }
            }
            g[y] = -1.0;
            lse - logits[y]
        }
        LossKind::Lm | LossKind::Cw => {
            let j = runner_up(logits, y);
            let v = logits[j] - logits[y];
            if kind == LossKind::Lm || v < 0.0 {
                g[j] = 1.0;
                g[y] = -1.0;
            }
            if kind == LossKind::Cw {
                v.min(0.0)
            } else {
                v
            }
        }
    };
    if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            context: "loss evaluation",
            iterate: None,
        });
    }
    Ok((value, g))
}

pub fn loss_grad_logits(kind: LossKind, logits: &[f64], y: usize) -> Result<Vec<f64>> {
    Ok(loss_and_grad(kind, logits, y)?.1)
}

fn ce_slm_ratio_unchecked(logits: &[f64], y: usize) -> f64 {
    (log_sum_exp_where(logits, |j| j != y) - log_sum_exp(logits)).exp()
}

/// `r = sum_{i != y} exp f_i / sum_i exp f_i`, the factor relating the
/// cross-entropy gradient to the soft-logit-margin gradient.
pub fn ce_slm_ratio(logits: &[f64], y: usize) -> Result<f64> {
    check(logits, y)?;
    Ok(ce_slm_ratio_unchecked(logits, y))
}
