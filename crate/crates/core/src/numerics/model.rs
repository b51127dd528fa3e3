use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{dot, DenseTensor};
use crate::error::{Error, Result};
use crate::seed;

/// One affine layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::Dimension {
                context: "layer weights",
                expected: inputs * outputs,
                actual: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::Dimension {
                context: "layer bias",
                expected: outputs,
                actual: bias.len(),
            });
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
        })
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.bias
                .iter()
                .enumerate()
                .map(|(o, b)| b + dot(self.row(o), x)),
        );
    }
}

/// Fully connected network: ReLU on every hidden layer, identity on the
/// output layer, which produces one logit per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseModel {
    layers: Vec<Layer>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer; the last entry holds the logits.
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.pre.last().expect("trace has at least one layer")
    }

    /// Pre-activations of every hidden layer.
    pub fn hidden_preactivations(&self) -> impl Iterator<Item = &[f64]> {
        let n = self.pre.len();
        self.pre[..n - 1].iter().map(Vec::as_slice)
    }
}

/// Gradients with the same layout as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<LayerGrad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ParamGrads {
    pub fn zeros_like(model: &DenseModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, a: f64, other: &ParamGrads) {
        for (l, o) in self.layers.iter_mut().zip(&other.layers) {
            super::tensor::axpy(a, &o.weights, &mut l.weights);
            super::tensor::axpy(a, &o.bias, &mut l.bias);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w *= a);
            l.bias.iter_mut().for_each(|b| *b *= a);
        }
    }

    /// Parameters flattened layer by layer, weights before bias.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }
}

impl DenseModel {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::argument("a model needs at least one layer"))?;
        let mut width = first.inputs;
        for l in &layers {
            if l.inputs != width {
                return Err(Error::Dimension {
                    context: "layer chaining",
                    expected: width,
                    actual: l.inputs,
                });
            }
            width = l.outputs;
        }
        if width < 2 {
            return Err(Error::argument("a classifier needs at least two output logits"));
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights and zero biases for the layer widths
    /// `[input, hidden..., classes]`.
    pub fn init(widths: &[usize], seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::argument("need at least input and output widths"));
        }
        let mut rng = seed::rng(seed::derive(seed, &[seed::stream::INIT]));
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-bound..=bound))
                    .collect();
                Layer::new(fan_in, fan_out, weights, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// Two-class linear model with logits `(0, w.x + b)`: class 1 is
    /// predicted iff `w.x + b > 0`.
    pub fn binary_linear(w: &[f64], b: f64) -> Result<Self> {
        let d = w.len();
        let mut weights = vec![0.0; d];
        weights.extend_from_slice(w);
        Self::new(vec![Layer::new(d, 2, weights, vec![0.0, b])?])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::Dimension {
                context: "flat parameters",
                expected: self.num_params(),
                actual: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        Ok(())
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::Dimension {
                context: "model input",
                expected: self.input_dim(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Logits of a single example. Panics in debug builds on width mismatch;
    /// use [`DenseModel::forward`] for checked batched evaluation.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.apply(&cur, &mut next);
            if i != last {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        super::tensor::argmax(&self.logits(x))
    }

    /// Forward pass recording what backpropagation needs.
    pub fn trace(&self, x: &[f64]) -> Trace {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(l.outputs);
            l.apply(&cur, &mut z);
            let next = if i != last {
                z.iter().map(|v| v.max(0.0)).collect()
            } else {
                Vec::new()
            };
            inputs.push(std::mem::replace(&mut cur, next));
            pre.push(z);
        }
        Trace { inputs, pre }
    }

    /// Backpropagate `upstream` (a cotangent over logits) through a recorded
    /// trace. Parameter gradients are accumulated into `params` when given;
    /// the input gradient is returned when `want_input` is set.
    pub fn pullback(
        &self,
        trace: &Trace,
        upstream: &[f64],
        mut params: Option<&mut ParamGrads>,
        want_input: bool,
    ) -> Option<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut g = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            if i != last {
                // ReLU subgradient at exactly zero is taken as 0.
                for (gi, z) in g.iter_mut().zip(&trace.pre[i]) {
                    if *z <= 0.0 {
                        *gi = 0.0;
                    }
                }
            }
            let input = &trace.inputs[i];
            if let Some(p) = params.as_deref_mut() {
                let lg = &mut p.layers[i];
                for (o, &go) in g.iter().enumerate() {
                    if go != 0.0 {
                        super::tensor::axpy(
                            go,
                            input,
                            &mut lg.weights[o * l.inputs..(o + 1) * l.inputs],
                        );
                    }
                    lg.bias[o] += go;
                }
            }
            if i == 0 && !want_input {
                return None;
            }
            let mut prev = vec![0.0; l.inputs];
            for (o, &go) in g.iter().enumerate() {
                if go != 0.0 {
                    super::tensor::axpy(go, l.row(o), &mut prev);
                }
            }
            g = prev;
        }
        Some(g)
    }

    /// Gradient of `<upstream, logits(x)>` with respect to a single input.
    pub fn input_grad(&self, x: &[f64], upstream: &[f64]) -> Vec<f64> {
        let t = self.trace(x);
        self.pullback(&t, upstream, None, true)
            .expect("input gradient requested")
    }

    /// Batched (or single-example) forward pass. Returns one row of logits
    /// per input row.
    pub fn forward(&self, x: &DenseTensor) -> Result<DenseTensor> {
        self.check_input(x.row_len())?;
        let k = self.num_classes();
        let mut out = Vec::with_capacity(x.rows() * k);
        for row in x.iter_rows() {
            out.extend(self.logits(row));
        }
        let shape = if x.shape().len() <= 1 {
            vec![k]
        } else {
            vec![x.rows(), k]
        };
        let t = DenseTensor::new(shape, out)?;
        Ok(t)
    }

    /// Gradients of `<upstream, forward(x)>` with respect to every parameter
    /// (summed over the batch) and with respect to `x`.
    pub fn backward(
        &self,
        x: &DenseTensor,
        upstream: &DenseTensor,
    ) -> Result<(ParamGrads, DenseTensor)> {
        self.check_input(x.row_len())?;
        let k = self.num_classes();
        if upstream.row_len() != k || upstream.rows() != x.rows() {
            return Err(Error::Dimension {
                context: "backward upstream",
                expected: x.rows() * k,
                actual: upstream.len(),
            });
        }
        let mut grads = ParamGrads::zeros_like(self);
        let mut input_grad = Vec::with_capacity(x.len());
        for (row, up) in x.iter_rows().zip(upstream.iter_rows()) {
            let t = self.trace(row);
            let g = self
                .pullback(&t, up, Some(&mut grads), true)
                .expect("input gradient requested");
            input_grad.extend(g);
        }
        if !grads.is_finite() {
            return Err(Error::Numeric {
                context: "backward",
                iterate: None,
            });
        }
        let ig = DenseTensor::new(x.shape().to_vec(), input_grad)?;
        Ok((grads, ig))
    }
}
