use serde::Serialize;

use super::EvalSettings;
use crate::masking::SufficiencyKind;

pub const METRICS_SCHEMA: &str = "sst.metrics/v1";
pub const CROSS_SCHEMA: &str = "sst.cross/v1";

/// Faithfulness percentage per sufficiency type; `null` when not evaluated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FaithfulnessByKind {
    pub baseline: Option<f64>,
    pub probabilistic: Option<f64>,
    pub robust: Option<f64>,
}

impl FaithfulnessByKind {
    pub fn get(&self, kind: SufficiencyKind) -> Option<f64> {
        match kind {
            SufficiencyKind::Baseline => self.baseline,
            SufficiencyKind::Probabilistic => self.probabilistic,
            SufficiencyKind::Robust => self.robust,
        }
    }

    pub fn set(&mut self, kind: SufficiencyKind, value: f64) {
        let slot = match kind {
            SufficiencyKind::Baseline => &mut self.baseline,
            SufficiencyKind::Probabilistic => &mut self.probabilistic,
            SufficiencyKind::Robust => &mut self.robust,
        };
        *slot = Some(value);
    }
}

/// Metric document written next to every trained model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub schema: String,
    pub dataset: String,
    pub instances: usize,
    pub accuracy_pct: f64,
    pub accuracy_gain_pct: Option<f64>,
    pub mean_size_pct: f64,
    pub mean_explain_seconds: f64,
    pub faithfulness: FaithfulnessByKind,
    pub threshold: f64,
    /// Check settings the faithfulness numbers were measured with.
    pub checks: EvalSettings,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Faithfulness of each trained model (row) under each check (column).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossMatrix {
    pub models: Vec<String>,
    pub checks: Vec<SufficiencyKind>,
    /// `cells[row][col]`; an `Err` carries the failure message of that cell.
    pub cells: Vec<Vec<Result<f64, String>>>,
}

impl CrossMatrix {
    pub fn get(&self, model: &str, check: SufficiencyKind) -> Option<&Result<f64, String>> {
        let r = self.models.iter().position(|m| m == model)?;
        let c = self.checks.iter().position(|&k| k == check)?;
        Some(&self.cells[r][c])
    }

    /// CSV with a schema line, a header of check names and one row per model.
    /// Failed cells read `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema={CROSS_SCHEMA}\ntrained");
        for k in &self.checks {
            out.push(',');
            out.push_str(k.name());
        }
        out.push('\n');
        for (name, row) in self.models.iter().zip(&self.cells) {
            out.push_str(name);
            for cell in row {
                match cell {
                    Ok(v) => out.push_str(&format!(",{v}")),
                    Err(_) => out.push_str(",failed"),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_csv_layout() {
        let m = CrossMatrix {
            models: vec!["robust".into(), "baseline".into()],
            checks: vec![SufficiencyKind::Baseline, SufficiencyKind::Robust],
            cells: vec![vec![Ok(50.0), Ok(99.5)], vec![Ok(91.25), Err("boom".into())]],
        };
        assert_eq!(
            m.to_csv(),
            "# schema=sst.cross/v1\ntrained,baseline,robust\nrobust,50,99.5\nbaseline,91.25,failed\n"
        );
        assert_eq!(m.get("robust", SufficiencyKind::Robust), Some(&Ok(99.5)));
    }
}
