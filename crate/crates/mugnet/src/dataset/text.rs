//! Text features: lowercase whitespace/punctuation tokenization into token
//! counts, then a truncated-SVD projection fitted on the training rows.

use crate::dataset::pca::PcaBasis;
use crate::dataset::{Dataset, Split};
use crate::error::Result;
use crate::neural::Tensor;
use std::collections::HashMap;

/// Lowercase and split on any non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Fitted text extractor: training-vocabulary token counts projected to
/// `min(text_dims, vocabulary size, training rows)` dimensions. Samples
/// with no known tokens come out as zero vectors.
#[derive(Debug, Clone)]
pub struct TextExtractor {
    vocab: HashMap<String, usize>,
    basis: PcaBasis,
}

fn count_tokens(sample_texts: &[String], vocab: &HashMap<String, usize>, out: &mut [f64]) {
    for text in sample_texts {
        for token in tokenize(text) {
            if let Some(&i) = vocab.get(&token) {
                out[i] += 1.0;
            }
        }
    }
}

impl TextExtractor {
    pub fn fit(dataset: &Dataset, text_dims: usize) -> Result<TextExtractor> {
        let train_rows = dataset.split_indices(Split::Train);
        // Vocabulary in first-appearance order over training rows.
        let mut vocab: HashMap<String, usize> = HashMap::new();
        for &r in &train_rows {
            for text in &dataset.samples[r].texts {
                for token in tokenize(text) {
                    let next = vocab.len();
                    vocab.entry(token).or_insert(next);
                }
            }
        }
        let dims = text_dims.min(vocab.len()).min(train_rows.len());
        let mut counts = Tensor::zeros(train_rows.len(), vocab.len());
        for (i, &r) in train_rows.iter().enumerate() {
            count_tokens(&dataset.samples[r].texts, &vocab, counts.row_mut(i));
        }
        let basis = PcaBasis::fit(&counts, dims, false)?;
        Ok(TextExtractor { vocab, basis })
    }

    pub fn output_dim(&self) -> usize {
        self.basis.output_dim()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<Tensor> {
        let mut out = Tensor::zeros(dataset.len(), self.output_dim());
        let mut counts = vec![0.0; self.vocab.len()];
        for (r, sample) in dataset.samples.iter().enumerate() {
            counts.iter_mut().for_each(|c| *c = 0.0);
            count_tokens(&sample.texts, &self.vocab, &mut counts);
            self.basis.transform_row(&counts, out.row_mut(r));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FieldKind, FieldSchema, Sample, Schema};

    fn text_dataset(texts: &[&str]) -> Dataset {
        let schema = Schema::new(vec![
            FieldSchema {
                column_name: "desc".into(),
                kind: FieldKind::Text,
                nullable: true,
            },
            FieldSchema {
                column_name: "y".into(),
                kind: FieldKind::Label,
                nullable: true,
            },
        ])
        .unwrap();
        let samples = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Sample {
                id: i.to_string(),
                tabular: vec![],
                texts: vec![t.to_string()],
                image_ref: None,
                label: Some(0),
            })
            .collect();
        Dataset::new(schema, samples, vec!["A".into()]).unwrap()
    }

    #[test]
    fn tokenizer_lowercases_and_splits_punctuation() {
        assert_eq!(
            tokenize("Hello, World! it's 42"),
            vec!["hello", "world", "it", "s", "42"]
        );
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn all_empty_texts_give_zero_width_block() {
        let ds = text_dataset(&["", "", ""]);
        let ex = TextExtractor::fit(&ds, 50).unwrap();
        assert_eq!(ex.output_dim(), 0);
        let out = ex.transform(&ds).unwrap();
        assert_eq!(out.shape(), (3, 0));
    }

    #[test]
    fn projection_matches_closed_form_svd_of_2x2_counts() {
        // Docs "a b" and "a a": count matrix [[1, 1], [2, 0]].
        // Top right singular vector of X is the top eigenvector of
        // X^T X = [[5, 2], [2, 1]]: eigenvalue 3 + 2*sqrt(2),
        // direction (2, lambda - 5), normalized, sign-fixed positive.
        let ds = text_dataset(&["a b", "a a"]);
        let ex = TextExtractor::fit(&ds, 1).unwrap();
        assert_eq!(ex.output_dim(), 1);
        let out = ex.transform(&ds).unwrap();

        let lambda = 3.0 + 2.0 * 2.0f64.sqrt();
        let (v0, v1) = (2.0, lambda - 5.0);
        let norm = (v0 * v0 + v1 * v1).sqrt();
        let (v0, v1) = (v0 / norm, v1 / norm);
        let expect0 = 1.0 * v0 + 1.0 * v1;
        let expect1 = 2.0 * v0;
        assert!((out.at(0, 0) - expect0).abs() < 1e-9, "{}", out.at(0, 0));
        assert!((out.at(1, 0) - expect1).abs() < 1e-9, "{}", out.at(1, 0));
    }

    #[test]
    fn row_count_matches_dataset_for_any_corpus() {
        let ds = text_dataset(&["x y z", "", "q", "x q"]);
        let ex = TextExtractor::fit(&ds, 2).unwrap();
        let out = ex.transform(&ds).unwrap();
        assert_eq!(out.rows(), 4);
        // Empty text row is a zero vector.
        assert!(out.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dims_capped_by_vocab_and_train_rows() {
        let ds = text_dataset(&["a b c d e", "a c"]);
        let ex = TextExtractor::fit(&ds, 50).unwrap();
        assert_eq!(ex.output_dim(), 2); // capped by 2 train rows
    }

    #[test]
    fn unseen_tokens_are_ignored() {
        let mut ds = text_dataset(&["a b", "a a", "zzz qqq"]);
        ds.split = vec![Split::Train, Split::Train, Split::Test];
        let ex = TextExtractor::fit(&ds, 2).unwrap();
        let out = ex.transform(&ds).unwrap();
        assert!(out.row(2).iter().all(|&v| v == 0.0));
    }
}
