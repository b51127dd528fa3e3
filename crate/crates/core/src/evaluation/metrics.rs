use crate::error::{Error, Result};

/// `(AvgAcc, AvgRobAcc)`: the mean over the clean and all robust
/// accuracies, and the mean over the robust accuracies alone.
pub fn compute_metrics(clean_acc: f64, rob_accs: &[f64]) -> Result<(f64, f64)> {
    if rob_accs.is_empty() {
        return Err(Error::argument("metrics need a non-empty eps grid"));
    }
    let sum: f64 = rob_accs.iter().sum();
    let n = rob_accs.len() as f64;
    Ok(((clean_acc + sum) / (n + 1.0), sum / n))
}
