//! Log-loss and accuracy. Log-loss shares its definition with the training
//! cross-entropy: mean `-log p[true]` with the same probability clip.

use crate::error::{MugError, Result};
use crate::neural::{cross_entropy_loss, Tensor};

/// Mean negative log-probability of the true label.
pub fn log_loss_metric(probabilities: &Tensor, true_labels: &[usize]) -> Result<f64> {
    cross_entropy_loss(probabilities, true_labels)
}

/// Index of the row maximum, lowest index on ties.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Fraction of exact matches between predicted and true labels.
pub fn accuracy_metric(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(MugError::Contract(format!(
            "accuracy over {} predictions vs {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}
