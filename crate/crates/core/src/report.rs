//! Per-seed result tables shared by test-set evaluation and scene inspection.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::label::KernelLabel;
use crate::model::classify;

/// One row: seed identifier, the sigmoid output ("calculation", rounded to
/// three decimals), and the label predicted from that rounded value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual: Option<KernelLabel>,
    pub calculation: f64,
    pub predict: KernelLabel,
    /// Unrounded model output.
    pub probability: f64,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
}

impl ReportRow {
    pub fn new(
        seed: impl Into<String>,
        actual: Option<KernelLabel>,
        probability: f64,
        bbox: Option<BoundingBox>,
    ) -> Result<Self> {
        let calculation = round3(probability);
        Ok(Self {
            seed: seed.into(),
            actual,
            calculation,
            predict: classify(calculation)?,
            probability,
            bbox,
        })
    }

    pub fn is_correct(&self) -> Option<bool> {
        self.actual.map(|a| a == self.predict)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub total: usize,
    pub normal: usize,
    pub abnormal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectionReport {
    pub rows: Vec<ReportRow>,
    pub totals: Totals,
    /// Present when every row has a known actual label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
}

impl InspectionReport {
    pub fn from_rows(rows: Vec<ReportRow>) -> Self {
        let normal = rows
            .iter()
            .filter(|r| r.predict == KernelLabel::Normal)
            .count();
        let totals = Totals {
            total: rows.len(),
            normal,
            abnormal: rows.len() - normal,
        };
        let accuracy = row_accuracy(&rows);
        Self {
            rows,
            totals,
            accuracy,
            loss: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: bad report: {e}", path.display())))
    }
}

/// Accuracy recomputed from the rows' actual/predict columns.
pub fn row_accuracy(rows: &[ReportRow]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let mut hits = 0;
    for row in rows {
        hits += usize::from(row.is_correct()?);
    }
    Some(hits as f64 / rows.len() as f64)
}

/// Round to three decimals, as the calculation column is displayed.
pub fn round3(p: f64) -> f64 {
    (p * 1000.0).round() / 1000.0
}
