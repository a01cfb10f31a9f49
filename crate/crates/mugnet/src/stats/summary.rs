//! Dataset-wise min-max normalization and box-plot summaries.

use crate::error::{MugError, Result};
use crate::stats::{Orientation, ResultsMatrix};
use serde::Serialize;

/// Rescale each dataset column so the best method maps to 1 and the worst
/// to 0, linear in between. Constant columns map to 0.5 everywhere. The
/// returned matrix is oriented higher-better by construction.
pub fn minmax_normalize(matrix: &ResultsMatrix) -> Result<ResultsMatrix> {
    let k = matrix.method_count();
    let n = matrix.dataset_count();
    let mut values = vec![0.0; k * n];
    for d in 0..n {
        let col = matrix.column(d);
        let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (m, &v) in col.iter().enumerate() {
            let norm = if max == min {
                0.5
            } else {
                match matrix.orientation() {
                    Orientation::HigherBetter => (v - min) / (max - min),
                    Orientation::LowerBetter => (max - v) / (max - min),
                }
            };
            values[m * n + d] = norm;
        }
    }
    matrix.with_values(values, Orientation::HigherBetter)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub min: f64,
    pub lower_whisker: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub upper_whisker: f64,
    pub max: f64,
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Five-number summary with linear-interpolation quartiles and whiskers at
/// the most extreme data points within 1.5 IQR of the quartiles.
pub fn box_summary(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(MugError::Contract("box summary of an empty list".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let lower_whisker = sorted
        .iter()
        .copied()
        .find(|&v| v >= lo_fence)
        .unwrap_or(sorted[0]);
    let upper_whisker = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= hi_fence)
        .unwrap_or(*sorted.last().unwrap());
    Ok(BoxStats {
        min: sorted[0],
        lower_whisker,
        q1,
        median,
        q3,
        upper_whisker,
        max: *sorted.last().unwrap(),
    })
}

impl BoxStats {
    pub fn ordering_holds(&self) -> bool {
        self.min <= self.lower_whisker
            && self.lower_whisker <= self.q1
            && self.q1 <= self.median
            && self.median <= self.q3
            && self.q3 <= self.upper_whisker
            && self.upper_whisker <= self.max
    }
}
