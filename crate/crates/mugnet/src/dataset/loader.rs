//! CSV ingestion: UTF-8 with header row, comma delimiter, double-quote
//! escaping. A header column literally named `id` supplies sample ids;
//! otherwise ids are zero-based row ordinals. Image paths are resolved
//! against `image_dir` but not checked for existence until decode time.

use crate::dataset::{CellValue, Dataset, FieldKind, Sample, Schema};
use crate::error::{MugError, Result};
use std::collections::BTreeMap;
use std::path::Path;

pub fn load_dataset(table_file: &Path, image_dir: &Path, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(table_file)
        .map_err(|e| MugError::io(table_file, std::io::Error::other(e)))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| MugError::Parse {
            row: 0,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MugError::Schema(format!("schema column {name:?} not in header")))
    };

    let tab_cols: Vec<(usize, FieldKind)> = schema
        .tabular_fields()
        .iter()
        .map(|f| Ok((col_index(&f.column_name)?, f.kind)))
        .collect::<Result<_>>()?;
    let text_cols: Vec<usize> = schema
        .text_fields()
        .iter()
        .map(|f| col_index(&f.column_name))
        .collect::<Result<_>>()?;
    let image_col = schema
        .image_field()
        .map(|f| col_index(&f.column_name))
        .transpose()?;
    let label_col = col_index(&schema.label_field().column_name)?;
    let id_col = headers.iter().position(|h| h == "id");

    struct RawRow {
        id: String,
        tabular: Vec<Option<CellValue>>,
        texts: Vec<String>,
        image: Option<String>,
        label: Option<String>,
    }

    let mut raw_rows: Vec<RawRow> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_no = i + 1;
        let record = record.map_err(|e| MugError::Parse {
            row: row_no,
            msg: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(MugError::Parse {
                row: row_no,
                msg: format!(
                    "expected {} columns, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        let cell = |c: usize| record.get(c).unwrap_or("").trim();

        let mut tabular = Vec::with_capacity(tab_cols.len());
        for &(c, kind) in &tab_cols {
            let v = cell(c);
            let parsed = if v.is_empty() {
                None
            } else {
                match kind {
                    FieldKind::Numerical => {
                        let num = v.parse::<f64>().map_err(|_| MugError::Parse {
                            row: row_no,
                            msg: format!(
                                "column {:?}: {v:?} is not numeric",
                                headers[c]
                            ),
                        })?;
                        Some(CellValue::Number(num))
                    }
                    FieldKind::Categorical => Some(CellValue::Category(v.to_string())),
                    _ => unreachable!("tabular_fields filters kinds"),
                }
            };
            tabular.push(parsed);
        }
        let texts = text_cols.iter().map(|&c| cell(c).to_string()).collect();
        let image = image_col.and_then(|c| {
            let v = cell(c);
            (!v.is_empty()).then(|| v.to_string())
        });
        let label = {
            let v = cell(label_col);
            (!v.is_empty()).then(|| v.to_string())
        };
        let id = match id_col {
            Some(c) => cell(c).to_string(),
            None => i.to_string(),
        };
        raw_rows.push(RawRow {
            id,
            tabular,
            texts,
            image,
            label,
        });
    }

    // Label vocabulary in first-appearance order.
    let mut label_vocab: Vec<String> = Vec::new();
    let mut label_index: BTreeMap<String, usize> = BTreeMap::new();
    for row in &raw_rows {
        if let Some(l) = &row.label {
            if !label_index.contains_key(l) {
                label_index.insert(l.clone(), label_vocab.len());
                label_vocab.push(l.clone());
            }
        }
    }

    let mut seen_ids = std::collections::BTreeSet::new();
    let mut samples = Vec::with_capacity(raw_rows.len());
    for row in raw_rows {
        if !seen_ids.insert(row.id.clone()) {
            return Err(MugError::Ingest(format!("duplicate sample id {:?}", row.id)));
        }
        samples.push(Sample {
            id: row.id,
            tabular: row.tabular,
            texts: row.texts,
            image_ref: row.image.map(|p| image_dir.join(p)),
            label: row.label.map(|l| label_index[&l]),
        });
    }
    Dataset::new(schema.clone(), samples, label_vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FieldSchema;
    use std::io::Write;

    fn schema() -> Schema {
        Schema::new(vec![
            FieldSchema {
                column_name: "hp".into(),
                kind: FieldKind::Numerical,
                nullable: true,
            },
            FieldSchema {
                column_name: "color".into(),
                kind: FieldKind::Categorical,
                nullable: true,
            },
            FieldSchema {
                column_name: "desc".into(),
                kind: FieldKind::Text,
                nullable: true,
            },
            FieldSchema {
                column_name: "img".into(),
                kind: FieldKind::ImagePath,
                nullable: true,
            },
            FieldSchema {
                column_name: "kind".into(),
                kind: FieldKind::Label,
                nullable: true,
            },
        ])
        .unwrap()
    }

    fn write_csv(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn blank_cells_become_missing_markers() {
        let (dir, path) = write_csv("id,hp,color,desc,img,kind\na,5,,hello,x.jpg,A\n");
        let ds = load_dataset(&path, dir.path(), &schema()).unwrap();
        assert_eq!(ds.len(), 1);
        let s = &ds.samples[0];
        assert_eq!(s.tabular[0], Some(CellValue::Number(5.0)));
        assert_eq!(s.tabular[1], None);
        assert_eq!(s.texts[0], "hello");
        assert_eq!(s.image_ref.as_ref().unwrap(), &dir.path().join("x.jpg"));
        assert_eq!(ds.label_vocab, vec!["A".to_string()]);
    }

    #[test]
    fn empty_file_with_header_is_valid_empty_dataset() {
        let (dir, path) = write_csv("id,hp,color,desc,img,kind\n");
        let ds = load_dataset(&path, dir.path(), &schema()).unwrap();
        assert_eq!(ds.len(), 0);
        assert!(ds.label_vocab.is_empty());
    }

    #[test]
    fn sample_order_preserved() {
        let (dir, path) = write_csv(
            "id,hp,color,desc,img,kind\na,1,r,,,A\nb,2,g,,,B\nc,3,b,,,A\n",
        );
        let ds = load_dataset(&path, dir.path(), &schema()).unwrap();
        let ids: Vec<&str> = ds.samples.iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        // Hand-written expected records.
        assert_eq!(ds.samples[1].tabular[0], Some(CellValue::Number(2.0)));
        assert_eq!(
            ds.samples[2].tabular[1],
            Some(CellValue::Category("b".into()))
        );
        assert_eq!(ds.samples[0].label, Some(0));
        assert_eq!(ds.samples[1].label, Some(1));
        assert_eq!(ds.samples[2].label, Some(0));
    }

    #[test]
    fn column_count_mismatch_reports_row_number() {
        let (dir, path) = write_csv("id,hp,color,desc,img,kind\na,1,r,,,A\nb,2,g,,A\n");
        let err = load_dataset(&path, dir.path(), &schema()).unwrap_err();
        match err {
            MugError::Parse { row, .. } => assert_eq!(row, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_id_is_ingestion_error() {
        let (dir, path) = write_csv("id,hp,color,desc,img,kind\na,1,r,,,A\na,2,g,,,B\n");
        assert!(matches!(
            load_dataset(&path, dir.path(), &schema()),
            Err(MugError::Ingest(_))
        ));
    }

    #[test]
    fn non_numeric_cell_in_numeric_column_is_parse_error() {
        let (dir, path) = write_csv("id,hp,color,desc,img,kind\na,abc,r,,,A\n");
        assert!(matches!(
            load_dataset(&path, dir.path(), &schema()),
            Err(MugError::Parse { row: 1, .. })
        ));
    }
}
