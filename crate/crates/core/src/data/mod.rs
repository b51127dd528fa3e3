//! Labeled datasets: synthetic Gaussian blobs, MNIST IDX files, splits and
//! preprocessing.

mod blobs;
mod idx;

pub use blobs::{gen_blobs, gen_blobs_labeled};
pub use idx::{
    decode_idx_images, decode_idx_labels, encode_idx_images, encode_idx_labels, load_mnist_idx,
    parse_mnist_idx, IdxImages, IMAGE_MAGIC, LABEL_MAGIC,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseTensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    /// Per-coordinate input domain, e.g. `(0, 1)` for images.
    pub bounds: Option<(f64, f64)>,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DenseTensor,
    labels: Vec<usize>,
    meta: DatasetMeta,
}

impl Dataset {
    pub fn new(inputs: DenseTensor, labels: Vec<usize>, meta: DatasetMeta) -> Result<Self> {
        if inputs.shape().len() != 2 {
            return Err(Error::argument("dataset inputs must be an n x d matrix"));
        }
        if labels.is_empty() {
            return Err(Error::argument("dataset must hold at least one example"));
        }
        if inputs.rows() != labels.len() {
            return Err(Error::Dimension {
                context: "dataset labels",
                expected: inputs.rows(),
                actual: labels.len(),
            });
        }
        if meta.num_classes < 2 {
            return Err(Error::argument("dataset needs at least two classes"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= meta.num_classes) {
            return Err(Error::Index {
                index: bad,
                classes: meta.num_classes,
            });
        }
        Ok(Self {
            inputs,
            labels,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.row_len()
    }

    pub fn num_classes(&self) -> usize {
        self.meta.num_classes
    }

    pub fn inputs(&self) -> &DenseTensor {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.meta.bounds
    }

    /// Examples `range` in order, as a new dataset.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::argument(format!(
                "slice {}..{} of a dataset with {} examples",
                range.start,
                range.end,
                self.len()
            )));
        }
        self.select(&range.collect::<Vec<_>>())
    }

    /// Examples at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::argument(format!("example index {i} out of range")));
            }
            data.extend_from_slice(self.input(i));
            labels.push(self.labels[i]);
        }
        let inputs = DenseTensor::new(vec![labels.len(), d], data)?;
        Self::new(inputs, labels, self.meta.clone())
    }

    /// The first `n` examples.
    pub fn take(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("take must keep at least one example"));
        }
        self.slice(0..n.min(self.len()))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes()];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Leading `val_fraction` of the examples becomes the validation split;
/// order is preserved in both parts.
pub fn split_train_val(ds: &Dataset, val_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::argument(format!(
            "validation fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    let n = ds.len();
    if n < 2 {
        return Err(Error::argument("need at least two examples to split"));
    }
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n - 1);
    Ok((ds.slice(n_val..n)?, ds.slice(0..n_val)?))
}

/// Per-feature affine map fitted on one dataset and applicable to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Features with zero spread keep a unit scale.
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.dim();
        let n = ds.len() as f64;
        let mut mean = vec![0.0; d];
        for row in ds.inputs.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for row in ds.inputs.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let std = var
            .into_iter()
            .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::Dimension {
                context: "standardizer",
                expected: self.mean.len(),
                actual: ds.dim(),
            });
        }
        let mut data = ds.inputs.data().to_vec();
        for row in data.chunks_mut(ds.dim()) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        let mut meta = ds.meta.clone();
        meta.bounds = None;
        Dataset::new(DenseTensor::new(vec![ds.len(), ds.dim()], data)?, ds.labels.clone(), meta)
    }
}

/// Fit a per-feature standardizer on `ds` and apply it. The input box is
/// dropped since it no longer applies in the new coordinates.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Standardizer)> {
    let s = Standardizer::fit(ds);
    Ok((s.apply(ds)?, s))
}
