//! Metrics and cross-dataset benchmark statistics: log-loss and accuracy,
//! mean ranks with the Friedman test and Nemenyi critical differences,
//! dataset-wise min-max normalization, Pareto frontiers, and box-plot
//! summaries.

mod cd_svg;
mod metrics;
mod pareto;
mod ranks;
mod summary;

pub use cd_svg::render_cd_diagram;
pub use metrics::{accuracy_metric, argmax_row, log_loss_metric};
pub use pareto::{pareto_frontier, ParetoPoint, ParetoResult};
pub use ranks::{cd_grouping, friedman_statistic, mean_ranks, nemenyi_cd, CdReport};
pub use summary::{box_summary, minmax_normalize, BoxStats};

use crate::error::{MugError, Result};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

impl std::str::FromStr for Orientation {
    type Err = MugError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" | "lower_better" => Ok(Orientation::LowerBetter),
            "higher" | "higher_better" => Ok(Orientation::HigherBetter),
            other => Err(MugError::Config(format!(
                "orientation must be 'lower' or 'higher', got {other:?}"
            ))),
        }
    }
}

/// Dense method-by-dataset metric table. No missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsMatrix {
    methods: Vec<String>,
    datasets: Vec<String>,
    /// Row-major, methods x datasets.
    values: Vec<f64>,
    orientation: Orientation,
}

impl ResultsMatrix {
    pub fn new(
        methods: Vec<String>,
        datasets: Vec<String>,
        values: Vec<f64>,
        orientation: Orientation,
    ) -> Result<Self> {
        if values.len() != methods.len() * datasets.len() {
            return Err(MugError::Contract(format!(
                "{} values for {} x {} table",
                values.len(),
                methods.len(),
                datasets.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MugError::Contract("non-finite metric value".into()));
        }
        Ok(ResultsMatrix {
            methods,
            datasets,
            values,
            orientation,
        })
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn method_count(&self) -> usize {
        self.methods.len()
    }

    pub fn dataset_count(&self) -> usize {
        self.datasets.len()
    }

    pub fn get(&self, method: usize, dataset: usize) -> f64 {
        self.values[method * self.datasets.len() + dataset]
    }

    pub fn column(&self, dataset: usize) -> Vec<f64> {
        (0..self.methods.len()).map(|m| self.get(m, dataset)).collect()
    }

    pub fn with_values(&self, values: Vec<f64>, orientation: Orientation) -> Result<ResultsMatrix> {
        ResultsMatrix::new(
            self.methods.clone(),
            self.datasets.clone(),
            values,
            orientation,
        )
    }

    /// Read either long form (`method,dataset,metric,value` — `metric`
    /// selects rows when `metric_filter` is given) or wide form
    /// (`method,<dataset>,<dataset>,...`).
    pub fn from_csv_file(
        path: &Path,
        orientation: Orientation,
        metric_filter: Option<&str>,
    ) -> Result<ResultsMatrix> {
        let raw = std::fs::read_to_string(path).map_err(|e| MugError::io(path, e))?;
        Self::from_csv_str(&raw, orientation, metric_filter)
    }

    pub fn from_csv_str(
        raw: &str,
        orientation: Orientation,
        metric_filter: Option<&str>,
    ) -> Result<ResultsMatrix> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(raw.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| MugError::Parse {
                row: 0,
                msg: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let long_form = headers.len() == 4
            && headers[0] == "method"
            && headers[1] == "dataset"
            && headers[2] == "metric"
            && headers[3] == "value";

        let mut methods: Vec<String> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        let mut cells: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        let mut intern = |list: &mut Vec<String>, name: &str| -> usize {
            match list.iter().position(|n| n == name) {
                Some(i) => i,
                None => {
                    list.push(name.to_string());
                    list.len() - 1
                }
            }
        };

        for (i, record) in reader.records().enumerate() {
            let row_no = i + 1;
            let record = record.map_err(|e| MugError::Parse {
                row: row_no,
                msg: e.to_string(),
            })?;
            let parse_value = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| MugError::Parse {
                    row: row_no,
                    msg: format!("{s:?} is not a number"),
                })
            };
            if long_form {
                let metric = record.get(2).unwrap_or("").trim();
                if let Some(f) = metric_filter {
                    if metric != f {
                        continue;
                    }
                }
                let m = intern(&mut methods, record.get(0).unwrap_or("").trim());
                let d = intern(&mut datasets, record.get(1).unwrap_or("").trim());
                cells.insert((m, d), parse_value(record.get(3).unwrap_or(""))?);
            } else {
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
                let m = intern(&mut methods, record.get(0).unwrap_or("").trim());
                for (c, name) in headers.iter().enumerate().skip(1) {
                    let d = intern(&mut datasets, name);
                    cells.insert((m, d), parse_value(record.get(c).unwrap_or(""))?);
                }
            }
        }

        let mut values = vec![f64::NAN; methods.len() * datasets.len()];
        for ((m, d), v) in cells {
            values[m * datasets.len() + d] = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(MugError::Format(
                "results table has missing method/dataset cells".into(),
            ));
        }
        ResultsMatrix::new(methods, datasets, values, orientation)
    }

    pub fn write_wide_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "method")?;
        for d in &self.datasets {
            write!(w, ",{d}")?;
        }
        writeln!(w)?;
        for (m, name) in self.methods.iter().enumerate() {
            write!(w, "{name}")?;
            for d in 0..self.datasets.len() {
                write!(w, ",{}", self.get(m, d))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
