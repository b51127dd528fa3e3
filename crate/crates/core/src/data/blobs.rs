use rand_distr::{Distribution, Normal};

use super::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::numerics::DenseTensor;
use crate::seed;

/// `n` points drawn around `centers`, one class per center. Example `i`
/// belongs to center `i mod centers.len()`, so class counts differ by at
/// most one.
pub fn gen_blobs(n: usize, centers: &[Vec<f64>], sigma: f64, seed: u64) -> Result<Dataset> {
    let labels: Vec<usize> = (0..centers.len()).collect();
    gen_blobs_labeled(n, centers, &labels, sigma, seed)
}

/// Like [`gen_blobs`] but with an explicit class for every center, so that
/// several blobs can share a class.
pub fn gen_blobs_labeled(
    n: usize,
    centers: &[Vec<f64>],
    labels: &[usize],
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if centers.len() < 2 {
        return Err(Error::argument("blobs need at least two centers"));
    }
    if labels.len() != centers.len() {
        return Err(Error::Dimension {
            context: "blob labels",
            expected: centers.len(),
            actual: labels.len(),
        });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::argument(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::argument("blobs need n >= 1"));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(Error::argument("blob centers must share one non-zero dimension"));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut rng = seed::rng(seed::derive(seed, &[seed::stream::DATA]));
    let mut data = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % centers.len();
        for &m in &centers[c] {
            let z: f64 = normal.sample(&mut rng);
            data.push(m + sigma * z);
        }
        ys.push(labels[c]);
    }
    Dataset::new(
        DenseTensor::new(vec![n, d], data)?,
        ys,
        DatasetMeta {
            name: "blobs".into(),
            bounds: None,
            num_classes,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tensor::l2_norm;

    fn two(dist: f64) -> Vec<Vec<f64>> {
        vec![vec![-dist / 2.0, 0.0], vec![dist / 2.0, 0.0]]
    }

    #[test]
    fn zero_sigma_sits_on_centers() {
        let ds = gen_blobs(10, &two(4.0), 0.0, 1).unwrap();
        for i in 0..10 {
            assert_eq!(ds.input(i), two(4.0)[ds.label(i)].as_slice());
        }
    }

    #[test]
    fn points_stay_near_their_center() {
        let c = two(4.0);
        let ds = gen_blobs(2000, &c, 0.2, 9).unwrap();
        let near = (0..ds.len())
            .filter(|&i| {
                let d: Vec<f64> = ds.input(i).iter().zip(&c[ds.label(i)]).map(|(a, b)| a - b).collect();
                l2_norm(&d) <= 1.0
            })
            .count();
        assert!(near as f64 >= 0.99 * 2000.0);
    }

    #[test]
    fn deterministic_and_balanced() {
        let c = vec![vec![0.0], vec![1.0], vec![2.0]];
        let a = gen_blobs(101, &c, 0.3, 5).unwrap();
        assert_eq!(a, gen_blobs(101, &c, 0.3, 5).unwrap());
        assert_ne!(a, gen_blobs(101, &c, 0.3, 6).unwrap());
        let counts = a.class_counts();
        for k in counts {
            assert!((k as f64 - 101.0 / 3.0).abs() <= 1.0);
        }
    }

    #[test]
    fn argument_checks() {
        assert!(gen_blobs(10, &[vec![0.0]], 0.1, 0).is_err());
        assert!(gen_blobs(10, &two(1.0), -1.0, 0).is_err());
        assert!(gen_blobs(10, &[vec![0.0], vec![0.0, 1.0]], 0.1, 0).is_err());
    }
}
