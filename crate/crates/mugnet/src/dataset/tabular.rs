//! Tabular encoding: numerical columns pass through unchanged, categorical
//! values map to integers in first-appearance order over the training rows.
//! Missing numericals impute the training median; missing or unseen
//! categoricals map to a reserved index equal to the training cardinality.

use crate::dataset::{CellValue, Dataset, FieldKind, Split};
use crate::error::{MugError, Result};
use crate::neural::Tensor;
use std::collections::HashMap;

#[derive(Debug, Clone)]
enum ColumnEncoder {
    Numerical { median: f64 },
    Categorical { index: HashMap<String, usize> },
}

/// Fitted tabular encoder. Fitting only sees rows with `split == Train`.
#[derive(Debug, Clone)]
pub struct TabularEncoder {
    columns: Vec<(String, ColumnEncoder)>,
}

fn median(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl TabularEncoder {
    pub fn fit(dataset: &Dataset) -> Result<TabularEncoder> {
        let names: Vec<String> = dataset
            .schema
            .tabular_fields()
            .iter()
            .map(|f| f.column_name.clone())
            .collect();
        Self::fit_columns(dataset, &names)
    }

    /// Fit on a chosen subset of columns; requesting a non-tabular column
    /// is a schema error.
    pub fn fit_columns(dataset: &Dataset, columns: &[String]) -> Result<TabularEncoder> {
        let tab_fields = dataset.schema.tabular_fields();
        let train_rows = dataset.split_indices(Split::Train);
        let mut encoders = Vec::with_capacity(columns.len());
        for name in columns {
            let field = dataset
                .schema
                .field(name)
                .ok_or_else(|| MugError::Schema(format!("unknown column {name:?}")))?;
            let tab_pos = tab_fields
                .iter()
                .position(|f| f.column_name == *name)
                .ok_or_else(|| {
                    MugError::Schema(format!(
                        "column {name:?} has kind {:?}, which is not encodable as tabular",
                        field.kind
                    ))
                })?;
            let enc = match field.kind {
                FieldKind::Numerical => {
                    let mut values: Vec<f64> = train_rows
                        .iter()
                        .filter_map(|&r| match &dataset.samples[r].tabular[tab_pos] {
                            Some(CellValue::Number(v)) => Some(*v),
                            _ => None,
                        })
                        .collect();
                    values.sort_by(|a, b| a.total_cmp(b));
                    ColumnEncoder::Numerical {
                        median: median(&values),
                    }
                }
                FieldKind::Categorical => {
                    let mut index = HashMap::new();
                    for &r in &train_rows {
                        if let Some(CellValue::Category(c)) = &dataset.samples[r].tabular[tab_pos] {
                            let next = index.len();
                            index.entry(c.clone()).or_insert(next);
                        }
                    }
                    ColumnEncoder::Categorical { index }
                }
                _ => unreachable!("tabular_fields position implies tabular kind"),
            };
            encoders.push((name.clone(), enc));
        }
        Ok(TabularEncoder { columns: encoders })
    }

    pub fn output_dim(&self) -> usize {
        self.columns.len()
    }

    /// Encode every sample row (any split) with the fitted state.
    pub fn transform(&self, dataset: &Dataset) -> Result<Tensor> {
        let tab_fields = dataset.schema.tabular_fields();
        let positions: Vec<usize> = self
            .columns
            .iter()
            .map(|(name, _)| {
                tab_fields
                    .iter()
                    .position(|f| f.column_name == *name)
                    .ok_or_else(|| MugError::Schema(format!("fitted column {name:?} missing")))
            })
            .collect::<Result<_>>()?;

        let mut out = Tensor::zeros(dataset.len(), self.columns.len());
        for (r, sample) in dataset.samples.iter().enumerate() {
            for (c, ((_, enc), &pos)) in self.columns.iter().zip(&positions).enumerate() {
                let cell = &sample.tabular[pos];
                let v = match enc {
                    ColumnEncoder::Numerical { median } => match cell {
                        Some(CellValue::Number(v)) => *v,
                        None => *median,
                        Some(CellValue::Category(_)) => {
                            return Err(MugError::Contract(format!(
                                "categorical cell in numerical column at row {r}"
                            )))
                        }
                    },
                    ColumnEncoder::Categorical { index } => {
                        let reserved = index.len() as f64;
                        match cell {
                            Some(CellValue::Category(cat)) => index
                                .get(cat)
                                .map(|&i| i as f64)
                                .unwrap_or(reserved),
                            None => reserved,
                            Some(CellValue::Number(_)) => {
                                return Err(MugError::Contract(format!(
                                    "numeric cell in categorical column at row {r}"
                                )))
                            }
                        }
                    }
                };
                out.set(r, c, v);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FieldSchema, Sample, Schema};

    fn dataset(numeric: &[Option<f64>], cats: &[Option<&str>]) -> Dataset {
        assert_eq!(numeric.len(), cats.len());
        let schema = Schema::new(vec![
            FieldSchema {
                column_name: "num".into(),
                kind: FieldKind::Numerical,
                nullable: true,
            },
            FieldSchema {
                column_name: "cat".into(),
                kind: FieldKind::Categorical,
                nullable: true,
            },
            FieldSchema {
                column_name: "y".into(),
                kind: FieldKind::Label,
                nullable: true,
            },
        ])
        .unwrap();
        let samples = numeric
            .iter()
            .zip(cats)
            .enumerate()
            .map(|(i, (n, c))| Sample {
                id: i.to_string(),
                tabular: vec![
                    n.map(CellValue::Number),
                    c.map(|s| CellValue::Category(s.into())),
                ],
                texts: vec![],
                image_ref: None,
                label: Some(0),
            })
            .collect();
        Dataset::new(schema, samples, vec!["A".into()]).unwrap()
    }

    #[test]
    fn categorical_first_appearance_enumeration() {
        let ds = dataset(
            &[Some(1.0), Some(1.0), Some(1.0), Some(1.0)],
            &[Some("red"), Some("blue"), Some("red"), Some("green")],
        );
        let enc = TabularEncoder::fit(&ds).unwrap();
        let out = enc.transform(&ds).unwrap();
        let col: Vec<f64> = (0..4).map(|r| out.at(r, 1)).collect();
        assert_eq!(col, vec![0.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn numerical_columns_pass_through_exactly() {
        let ds = dataset(&[Some(1.5), Some(2.0)], &[Some("a"), Some("a")]);
        let enc = TabularEncoder::fit(&ds).unwrap();
        let out = enc.transform(&ds).unwrap();
        assert_eq!(out.at(0, 0), 1.5);
        assert_eq!(out.at(1, 0), 2.0);
    }

    #[test]
    fn missing_numerical_imputes_train_median() {
        let ds = dataset(
            &[Some(1.0), Some(3.0), Some(5.0), None],
            &[Some("a"), Some("a"), Some("a"), Some("a")],
        );
        let enc = TabularEncoder::fit(&ds).unwrap();
        let out = enc.transform(&ds).unwrap();
        assert_eq!(out.at(3, 0), 3.0);
    }

    #[test]
    fn unseen_and_missing_categories_get_reserved_index() {
        let mut ds = dataset(
            &[Some(0.0), Some(0.0), Some(0.0), Some(0.0)],
            &[Some("red"), Some("blue"), Some("yellow"), None],
        );
        // Fit only on the first two rows.
        ds.split = vec![Split::Train, Split::Train, Split::Test, Split::Test];
        let enc = TabularEncoder::fit(&ds).unwrap();
        let out = enc.transform(&ds).unwrap();
        assert_eq!(out.at(0, 1), 0.0);
        assert_eq!(out.at(1, 1), 1.0);
        assert_eq!(out.at(2, 1), 2.0); // unseen -> reserved = train cardinality
        assert_eq!(out.at(3, 1), 2.0); // missing -> reserved
    }

    #[test]
    fn requesting_non_tabular_column_is_schema_error() {
        let ds = dataset(&[Some(1.0)], &[Some("a")]);
        let err = TabularEncoder::fit_columns(&ds, &["y".to_string()]);
        assert!(matches!(err, Err(MugError::Schema(_))));
    }
}
