//! Schema files and schema inference.
//!
//! The schema file is JSON: `{"columns": [{"column_name": "...", "kind":
//! "numerical|categorical|text|image_path|label", "nullable": true}, ...]}`.
//!
//! Inference scans the CSV: columns whose non-blank cells all parse as
//! numbers become numerical, everything else categorical; columns named in
//! the hints are forced to text/image/label.

use crate::dataset::{FieldKind, FieldSchema, Schema};
use crate::error::{MugError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct SchemaFile {
    columns: Vec<FieldSchema>,
}

pub fn read_schema_file(path: &Path) -> Result<Schema> {
    let raw = std::fs::read_to_string(path).map_err(|e| MugError::io(path, e))?;
    let parsed: SchemaFile = serde_json::from_str(&raw)
        .map_err(|e| MugError::Schema(format!("{}: {e}", path.display())))?;
    Schema::new(parsed.columns)
}

pub fn write_schema_file(schema: &Schema, path: &Path) -> Result<()> {
    let file = SchemaFile {
        columns: schema.fields().to_vec(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| MugError::Schema(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| MugError::io(path, e))
}

/// Column-name overrides for inference.
#[derive(Debug, Clone, Default)]
pub struct InferenceHints {
    pub label_column: String,
    pub text_columns: Vec<String>,
    pub image_column: Option<String>,
    /// Columns to skip entirely (e.g. an id column).
    pub ignore_columns: Vec<String>,
}

pub fn infer_schema(table_file: &Path, hints: &InferenceHints) -> Result<Schema> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(table_file)
        .map_err(|e| MugError::Parse {
            row: 0,
            msg: e.to_string(),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| MugError::Parse {
            row: 0,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    if hints.label_column.is_empty() {
        return Err(MugError::Schema(
            "schema inference requires a label column name".into(),
        ));
    }
    for required in std::iter::once(&hints.label_column)
        .chain(&hints.text_columns)
        .chain(&hints.image_column)
    {
        if !headers.iter().any(|h| h == required) {
            return Err(MugError::Schema(format!(
                "hinted column {required:?} not in header"
            )));
        }
    }

    let mut numeric_ok = vec![true; headers.len()];
    let mut saw_value = vec![false; headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| MugError::Parse {
            row: 0,
            msg: e.to_string(),
        })?;
        for (i, cell) in record.iter().enumerate() {
            if i >= headers.len() || cell.trim().is_empty() {
                continue;
            }
            saw_value[i] = true;
            if cell.trim().parse::<f64>().is_err() {
                numeric_ok[i] = false;
            }
        }
    }

    let mut fields = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if hints.ignore_columns.iter().any(|c| c == name) || name == "id" {
            continue;
        }
        let kind = if *name == hints.label_column {
            FieldKind::Label
        } else if hints.text_columns.iter().any(|c| c == name) {
            FieldKind::Text
        } else if hints.image_column.as_deref() == Some(name) {
            FieldKind::ImagePath
        } else if numeric_ok[i] && saw_value[i] {
            FieldKind::Numerical
        } else {
            FieldKind::Categorical
        };
        fields.push(FieldSchema {
            column_name: name.clone(),
            kind,
            nullable: true,
        });
    }
    Schema::new(fields)
}
