use super::tensor::DenseTensor;
use crate::error::{Error, Result};

/// Central finite-difference gradient of a scalar function,
/// `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate.
pub fn finite_diff_grad<F>(f: F, x: &DenseTensor, h: f64) -> Result<DenseTensor>
where
    F: Fn(&DenseTensor) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::argument(format!("step h must be positive, got {h}")));
    }
    let mut probe = x.clone();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric {
                context: "finite difference evaluation",
                iterate: Some(i),
            });
        }
        grad.push((up - down) / (2.0 * h));
    }
    DenseTensor::new(x.shape().to_vec(), grad)
}

/// Same as [`finite_diff_grad`] over a plain slice.
pub fn finite_diff_slice<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let t = DenseTensor::vector(x.to_vec())?;
    Ok(finite_diff_grad(|t| f(t.data()), &t, h)?.into_data())
}
