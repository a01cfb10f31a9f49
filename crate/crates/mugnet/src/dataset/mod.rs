//! Data model, CSV ingestion, preprocessing, and per-modality feature
//! extraction for samples with tabular, textual, and visual fields.

mod features;
mod image_feats;
mod loader;
mod pca;
mod preprocess;
mod schema;
mod tabular;
mod text;

pub use features::{
    read_feature_block, write_feature_block, ExtractorSpec, FittedExtractors, ModalityFeatures,
    FEATURE_BLOCK_MAGIC,
};
pub use image_feats::ImageExtractor;
pub use loader::load_dataset;
pub use pca::PcaBasis;
pub use preprocess::{regroup_sparse_labels, split_dataset};
pub use schema::{infer_schema, read_schema_file, write_schema_file, InferenceHints};
pub use tabular::TabularEncoder;
pub use text::{tokenize, TextExtractor};

use crate::error::{MugError, Result};
use std::path::PathBuf;

/// Category merged labels end up in when their count falls below the
/// regrouping threshold.
pub const OTHER_LABEL: &str = "Other";
/// Category assigned to samples whose label cell is missing.
pub const NONE_TYPE_LABEL: &str = "None_Type";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Numerical,
    Categorical,
    Text,
    ImagePath,
    Label,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FieldSchema {
    pub column_name: String,
    pub kind: FieldKind,
    #[serde(default = "default_nullable")]
    pub nullable: bool,
}

fn default_nullable() -> bool {
    true
}

/// Validated column list: unique names, exactly one label column, at most
/// one image column.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    fields: Vec<FieldSchema>,
}

impl Schema {
    pub fn new(fields: Vec<FieldSchema>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &fields {
            if !seen.insert(f.column_name.as_str()) {
                return Err(MugError::Schema(format!(
                    "duplicate column name {:?}",
                    f.column_name
                )));
            }
        }
        let labels = fields.iter().filter(|f| f.kind == FieldKind::Label).count();
        if labels != 1 {
            return Err(MugError::Schema(format!(
                "expected exactly one label column, found {labels}"
            )));
        }
        let images = fields
            .iter()
            .filter(|f| f.kind == FieldKind::ImagePath)
            .count();
        if images > 1 {
            return Err(MugError::Schema(format!(
                "at most one image column supported, found {images}"
            )));
        }
        Ok(Schema { fields })
    }

    pub fn fields(&self) -> &[FieldSchema] {
        &self.fields
    }

    /// Numerical and categorical columns in schema order.
    pub fn tabular_fields(&self) -> Vec<&FieldSchema> {
        self.fields
            .iter()
            .filter(|f| matches!(f.kind, FieldKind::Numerical | FieldKind::Categorical))
            .collect()
    }

    pub fn text_fields(&self) -> Vec<&FieldSchema> {
        self.fields
            .iter()
            .filter(|f| f.kind == FieldKind::Text)
            .collect()
    }

    pub fn image_field(&self) -> Option<&FieldSchema> {
        self.fields.iter().find(|f| f.kind == FieldKind::ImagePath)
    }

    pub fn label_field(&self) -> &FieldSchema {
        self.fields
            .iter()
            .find(|f| f.kind == FieldKind::Label)
            .expect("schema invariant: one label column")
    }

    pub fn field(&self, name: &str) -> Option<&FieldSchema> {
        self.fields.iter().find(|f| f.column_name == name)
    }
}

/// A tabular cell: a number, a category token, or explicitly absent.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Number(f64),
    Category(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    /// Aligned with [`Schema::tabular_fields`]; `None` marks a missing cell.
    pub tabular: Vec<Option<CellValue>>,
    /// Aligned with [`Schema::text_fields`]; blank cells become empty strings.
    pub texts: Vec<String>,
    pub image_ref: Option<PathBuf>,
    /// Index into the dataset label vocabulary.
    pub label: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub samples: Vec<Sample>,
    /// Ordered category names; sample labels index into this.
    pub label_vocab: Vec<String>,
    /// One tag per sample. Freshly loaded datasets start all-train.
    pub split: Vec<Split>,
}

impl Dataset {
    pub fn new(schema: Schema, samples: Vec<Sample>, label_vocab: Vec<String>) -> Result<Self> {
        for s in &samples {
            if let Some(l) = s.label {
                if l >= label_vocab.len() {
                    return Err(MugError::Contract(format!(
                        "sample {:?} label index {l} out of vocabulary (size {})",
                        s.id,
                        label_vocab.len()
                    )));
                }
            }
        }
        let split = vec![Split::Train; samples.len()];
        Ok(Dataset {
            schema,
            samples,
            label_vocab,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == split).then_some(i))
            .collect()
    }

    /// Per-label sample counts over the whole dataset, aligned with
    /// `label_vocab`.
    pub fn label_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.label_vocab.len()];
        for s in &self.samples {
            if let Some(l) = s.label {
                counts[l] += 1;
            }
        }
        counts
    }

    /// A copy containing only the selected sample indices (split tags kept).
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut samples = Vec::with_capacity(indices.len());
        let mut split = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(MugError::Contract(format!("subset index {i} out of range")));
            }
            samples.push(self.samples[i].clone());
            split.push(self.split[i]);
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            samples,
            label_vocab: self.label_vocab.clone(),
            split,
        })
    }
}
