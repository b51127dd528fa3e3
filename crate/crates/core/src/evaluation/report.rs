use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::attacks::Norm;
use crate::error::{Error, Result};

/// Accuracies in percent; robust entries follow the eps grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub clean_acc: f64,
    pub whitebox_rob: Vec<f64>,
    pub combined_rob: Vec<f64>,
    /// `whitebox_rob - combined_rob` per eps.
    pub transfer_gap: Vec<f64>,
    /// Means over the combined robust accuracies.
    pub avg_acc: f64,
    pub avg_rob_acc: f64,
    pub whitebox_avg_acc: f64,
    pub whitebox_avg_rob_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub norm: Norm,
    pub eps_grid: Vec<f64>,
    pub examples: usize,
    pub restarts: usize,
    /// Attack results that left the norm ball or the input box.
    pub invariant_violations: usize,
    pub models: Vec<ModelReport>,
}

fn r2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

impl ModelReport {
    fn rounded(&self) -> Self {
        let all = |v: &[f64]| v.iter().map(|&x| r2(x)).collect();
        Self {
            name: self.name.clone(),
            clean_acc: r2(self.clean_acc),
            whitebox_rob: all(&self.whitebox_rob),
            combined_rob: all(&self.combined_rob),
            transfer_gap: all(&self.transfer_gap),
            avg_acc: r2(self.avg_acc),
            avg_rob_acc: r2(self.avg_rob_acc),
            whitebox_avg_acc: r2(self.whitebox_avg_acc),
            whitebox_avg_rob_acc: r2(self.whitebox_avg_rob_acc),
        }
    }
}

impl EvalReport {
    /// Copy with every accuracy rounded to two decimals, for emission.
    pub fn rounded(&self) -> Self {
        Self {
            models: self.models.iter().map(ModelReport::rounded).collect(),
            ..self.clone()
        }
    }

    /// One row per model: clean, AvgAcc, AvgRobAcc, combined robust
    /// accuracy per eps, then whitebox-only accuracy and TransferGap per eps.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "model".to_string(),
            "clean_acc".into(),
            "avg_acc".into(),
            "avg_rob_acc".into(),
        ];
        for prefix in ["rob", "whitebox", "gap"] {
            header.extend(self.eps_grid.iter().map(|e| format!("{prefix}@{e}")));
        }
        w.write_record(&header)?;
        let f = |v: f64| format!("{v:.2}");
        for m in &self.models {
            let mut row = vec![m.name.clone(), f(m.clean_acc), f(m.avg_acc), f(m.avg_rob_acc)];
            for v in [&m.combined_rob, &m.whitebox_rob, &m.transfer_gap] {
                row.extend(v.iter().map(|&x| f(x)));
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<report csv>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rounded())?)
    }
}
