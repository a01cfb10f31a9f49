//! Split assignment and sparse-class regrouping.

use crate::dataset::{Dataset, Split, NONE_TYPE_LABEL, OTHER_LABEL};
use crate::error::{MugError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Deterministic shuffled partition. Each split gets `floor(ratio * N)`
/// samples; leftover rows go to train. Existing split tags are overwritten.
pub fn split_dataset(dataset: &Dataset, ratios: [f64; 3], seed: u64) -> Result<Dataset> {
    if ratios.iter().any(|&r| r < 0.0) {
        return Err(MugError::Config("split ratios must be nonnegative".into()));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(MugError::Config(format!(
            "split ratios must sum to 1, got {sum}"
        )));
    }
    let n = dataset.len();
    if n < 3 && ratios.iter().all(|&r| r > 0.0) {
        return Err(MugError::DegenerateSplit(format!(
            "cannot produce three nonempty-ratio splits from {n} samples"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n_train_base = (ratios[0] * n as f64).floor() as usize;
    let n_val = (ratios[1] * n as f64).floor() as usize;
    let n_test = (ratios[2] * n as f64).floor() as usize;
    let n_train = n_train_base + (n - n_train_base - n_val - n_test);

    let mut split = vec![Split::Train; n];
    for (pos, &idx) in order.iter().enumerate() {
        split[idx] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    let mut out = dataset.clone();
    out.split = split;
    Ok(out)
}

/// Merge labels rarer than `min_count` into [`OTHER_LABEL`] and assign
/// [`NONE_TYPE_LABEL`] to samples with a missing label, rebuilding the
/// vocabulary. Surviving labels keep their original order; the merged and
/// none-type categories are appended at the end.
pub fn regroup_sparse_labels(dataset: &Dataset, min_count: u64) -> Dataset {
    let counts = dataset.label_counts();
    let has_missing = dataset.samples.iter().any(|s| s.label.is_none());
    let survives: Vec<bool> = counts.iter().map(|&c| c >= min_count).collect();
    let any_merged = survives.iter().any(|&s| !s);

    let mut new_vocab: Vec<String> = Vec::new();
    let mut remap: Vec<usize> = vec![usize::MAX; dataset.label_vocab.len()];
    for (i, name) in dataset.label_vocab.iter().enumerate() {
        if survives[i] {
            remap[i] = new_vocab.len();
            new_vocab.push(name.clone());
        }
    }
    let other_idx = if any_merged {
        let idx = new_vocab
            .iter()
            .position(|n| n == OTHER_LABEL)
            .unwrap_or_else(|| {
                new_vocab.push(OTHER_LABEL.to_string());
                new_vocab.len() - 1
            });
        for (i, ok) in survives.iter().enumerate() {
            if !ok {
                remap[i] = idx;
            }
        }
        Some(idx)
    } else {
        None
    };
    let _ = other_idx;
    let none_idx = if has_missing {
        let idx = new_vocab
            .iter()
            .position(|n| n == NONE_TYPE_LABEL)
            .unwrap_or_else(|| {
                new_vocab.push(NONE_TYPE_LABEL.to_string());
                new_vocab.len() - 1
            });
        Some(idx)
    } else {
        None
    };

    let mut out = dataset.clone();
    out.label_vocab = new_vocab;
    for s in &mut out.samples {
        s.label = match s.label {
            Some(old) => Some(remap[old]),
            None => none_idx,
        };
    }
    out
}
