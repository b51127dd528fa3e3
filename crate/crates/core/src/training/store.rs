use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-example perturbation lengths carried across epochs, kept within
/// `[eps_min, eps_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStore {
    values: Vec<f64>,
    eps_min: f64,
    eps_max: f64,
}

impl EpsilonStore {
    pub fn new(n: usize, eps_min: f64, eps_max: f64) -> Result<Self> {
        if !(eps_min >= 0.0 && eps_max >= eps_min) {
            return Err(Error::argument(format!(
                "need 0 <= eps_min <= eps_max, got {eps_min} and {eps_max}"
            )));
        }
        Ok(Self {
            values: vec![eps_min; n],
            eps_min,
            eps_max,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Store `value` clamped into the bounds.
    pub fn set(&mut self, i: usize, value: f64) {
        let v = if value.is_finite() { value } else { self.eps_max };
        self.values[i] = v.clamp(self.eps_min, self.eps_max);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.eps_min, self.eps_max)
    }

    pub fn within_bounds(&self) -> bool {
        self.values
            .iter()
            .all(|&v| v >= self.eps_min && v <= self.eps_max)
    }
}
