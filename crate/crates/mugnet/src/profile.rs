//! Dataset diversity statistics: class balance (Shannon equitability),
//! missing-value percentages, numeric means/SDs, categorical cardinalities,
//! word-count distribution, and mean-RGB-pixel distribution.

use crate::dataset::{CellValue, Dataset, FieldKind, Split};
use crate::error::{MugError, Result};
use serde::Serialize;

pub const RGB_HIST_BINS: usize = 32;

/// Shannon equitability of positive class counts: entropy of the count
/// proportions divided by `ln(k)`, natural log, zero counts skipped. A
/// single surviving category is defined as perfectly balanced (1.0).
/// Exactly equal counts return exactly 1.0.
pub fn shannon_equitability(class_counts: &[u64]) -> Result<f64> {
    let nonzero: Vec<u64> = class_counts.iter().copied().filter(|&c| c > 0).collect();
    if nonzero.is_empty() {
        return Err(MugError::Domain(
            "equitability needs at least one positive count".into(),
        ));
    }
    let k = nonzero.len();
    if k == 1 {
        log::warn!("equitability of a single category is defined as 1.0");
        return Ok(1.0);
    }
    if nonzero.iter().all(|&c| c == nonzero[0]) {
        return Ok(1.0);
    }
    let n: u64 = nonzero.iter().sum();
    let mut h = 0.0;
    for &c in &nonzero {
        let p = c as f64 / n as f64;
        h -= p * p.ln();
    }
    Ok((h / (k as f64).ln()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnProfile {
    pub name: String,
    pub kind: String,
    pub missing_pct: f64,
    pub valid_pct: f64,
    /// Mean of non-missing values; absent for all-missing or non-numeric.
    pub mean: Option<f64>,
    /// Population standard deviation of non-missing values.
    pub sd: Option<f64>,
    /// Distinct non-missing categories; absent for numeric columns.
    pub cardinality: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetProfile {
    pub sample_count: usize,
    pub equitability: f64,
    pub label_counts: Vec<(String, u64)>,
    pub overall_missing_pct: f64,
    pub overall_valid_pct: f64,
    pub columns: Vec<ColumnProfile>,
    /// Word count per sample -> percentage of samples, sorted by count.
    pub word_count_hist: Vec<(usize, f64)>,
    /// Percentages over `RGB_HIST_BINS` uniform bins spanning [0, 255].
    pub rgb_mean_hist: Vec<f64>,
    /// Images that contributed to the RGB histogram.
    pub rgb_image_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileScope {
    AllSplits,
    TrainOnly,
}

pub fn profile_dataset(dataset: &Dataset, scope: ProfileScope) -> Result<DatasetProfile> {
    let rows: Vec<usize> = match scope {
        ProfileScope::AllSplits => (0..dataset.len()).collect(),
        ProfileScope::TrainOnly => dataset.split_indices(Split::Train),
    };
    if rows.is_empty() {
        return Err(MugError::Domain("empty dataset".into()));
    }

    // Label balance.
    let mut counts = vec![0u64; dataset.label_vocab.len()];
    for &r in &rows {
        if let Some(l) = dataset.samples[r].label {
            counts[l] += 1;
        }
    }
    let equitability = shannon_equitability(&counts)?;
    let label_counts = dataset
        .label_vocab
        .iter()
        .cloned()
        .zip(counts.iter().copied())
        .collect();

    // Per-column tabular statistics.
    let tab_fields = dataset.schema.tabular_fields();
    let mut columns = Vec::with_capacity(tab_fields.len());
    let mut total_cells = 0usize;
    let mut total_missing = 0usize;
    for (pos, field) in tab_fields.iter().enumerate() {
        let mut missing = 0usize;
        let mut numbers: Vec<f64> = Vec::new();
        let mut cats = std::collections::BTreeSet::new();
        for &r in &rows {
            match &dataset.samples[r].tabular[pos] {
                None => missing += 1,
                Some(CellValue::Number(v)) => numbers.push(*v),
                Some(CellValue::Category(c)) => {
                    cats.insert(c.clone());
                }
            }
        }
        total_cells += rows.len();
        total_missing += missing;
        let missing_pct = 100.0 * missing as f64 / rows.len() as f64;
        let (mean, sd) = if field.kind == FieldKind::Numerical && !numbers.is_empty() {
            let m = numbers.iter().sum::<f64>() / numbers.len() as f64;
            let var = numbers.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
                / numbers.len() as f64;
            (Some(m), Some(var.sqrt()))
        } else {
            (None, None)
        };
        columns.push(ColumnProfile {
            name: field.column_name.clone(),
            kind: format!("{:?}", field.kind).to_lowercase(),
            missing_pct,
            valid_pct: 100.0 - missing_pct,
            mean,
            sd,
            cardinality: (field.kind == FieldKind::Categorical).then_some(cats.len()),
        });
    }
    let overall_missing_pct = if total_cells > 0 {
        100.0 * total_missing as f64 / total_cells as f64
    } else {
        0.0
    };

    // Word counts per sample over concatenated text fields.
    let mut word_hist = std::collections::BTreeMap::<usize, usize>::new();
    for &r in &rows {
        let count: usize = dataset.samples[r]
            .texts
            .iter()
            .map(|t| crate::dataset::tokenize(t).len())
            .sum();
        *word_hist.entry(count).or_insert(0) += 1;
    }
    let word_count_hist = word_hist
        .into_iter()
        .map(|(c, n)| (c, 100.0 * n as f64 / rows.len() as f64))
        .collect();

    // Mean RGB pixel value per image, binned over [0, 255].
    let mut rgb_bins = vec![0usize; RGB_HIST_BINS];
    let mut rgb_image_count = 0usize;
    for &r in &rows {
        let Some(path) = &dataset.samples[r].image_ref else { continue };
        let Ok(img) = image::open(path) else { continue };
        let rgb = img.to_rgb8();
        let sum: u64 = rgb.as_raw().iter().map(|&b| b as u64).sum();
        let mean = sum as f64 / rgb.as_raw().len() as f64;
        let bin = ((mean / 255.0) * RGB_HIST_BINS as f64).floor() as usize;
        rgb_bins[bin.min(RGB_HIST_BINS - 1)] += 1;
        rgb_image_count += 1;
    }
    let rgb_mean_hist = rgb_bins
        .iter()
        .map(|&n| {
            if rgb_image_count > 0 {
                100.0 * n as f64 / rgb_image_count as f64
            } else {
                0.0
            }
        })
        .collect();

    Ok(DatasetProfile {
        sample_count: rows.len(),
        equitability,
        label_counts,
        overall_missing_pct,
        overall_valid_pct: 100.0 - overall_missing_pct,
        columns,
        word_count_hist,
        rgb_mean_hist,
        rgb_image_count,
    })
}

impl DatasetProfile {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| MugError::Format(e.to_string()))
    }

    /// Plain-text table for standard output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        use std::fmt::Write;
        let _ = writeln!(out, "samples: {}", self.sample_count);
        let _ = writeln!(out, "shannon equitability: {:.4}", self.equitability);
        let _ = writeln!(
            out,
            "overall cells: {:.2}% valid / {:.2}% missing",
            self.overall_valid_pct, self.overall_missing_pct
        );
        let _ = writeln!(out, "{:<24} {:<12} {:>8} {:>12} {:>12} {:>8}",
            "column", "kind", "miss%", "mean", "sd", "cats");
        for c in &self.columns {
            let fmt_opt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.3}"),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<24} {:<12} {:>8.2} {:>12} {:>12} {:>8}",
                c.name,
                c.kind,
                c.missing_pct,
                fmt_opt(c.mean),
                fmt_opt(c.sd),
                c.cardinality.map_or("-".to_string(), |n| n.to_string()),
            );
        }
        let _ = writeln!(out, "label counts:");
        for (name, count) in &self.label_counts {
            let _ = writeln!(out, "  {name}: {count}");
        }
        if self.rgb_image_count > 0 {
            let _ = writeln!(out, "rgb mean histogram over {} images", self.rgb_image_count);
        }
        out
    }
}
