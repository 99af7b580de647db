//! Tabular data for the logistic-regression posterior: CSV ingestion,
//! standardization and two-way interaction features.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Binary,
}

/// Feature matrix (row-major), labels in {-1, +1} and per-feature kinds.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    kinds: Vec<FeatureKind>,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(
        names: Vec<String>,
        kinds: Vec<FeatureKind>,
        features: Vec<f64>,
        labels: Vec<f64>,
    ) -> Result<Self> {
        let d = names.len();
        if kinds.len() != d {
            return Err(Error::usage("one feature kind per feature is required"));
        }
        if d == 0 || labels.is_empty() {
            return Err(Error::usage("dataset must have at least one row and one feature"));
        }
        if features.len() != d * labels.len() {
            return Err(Error::usage("feature matrix shape does not match labels"));
        }
        Ok(Dataset {
            names,
            kinds,
            features,
            labels,
        })
    }

    pub fn n_data(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let d = self.n_features();
        self.features.iter().skip(j).step_by(d).copied().collect()
    }

    fn set_column(&mut self, j: usize, values: &[f64]) {
        let d = self.n_features();
        for (i, v) in values.iter().enumerate() {
            self.features[i * d + j] = *v;
        }
    }

    /// Builds a new dataset by appending `extra` columns row by row.
    fn with_appended(
        &self,
        names: Vec<String>,
        kinds: Vec<FeatureKind>,
        mut row_extra: impl FnMut(&[f64], &mut Vec<f64>),
    ) -> Dataset {
        let d_new = self.n_features() + names.len();
        let mut features = Vec::with_capacity(d_new * self.n_data());
        for i in 0..self.n_data() {
            let row = self.row(i);
            features.extend_from_slice(row);
            row_extra(row, &mut features);
        }
        let mut all_names = self.names.clone();
        all_names.extend(names);
        let mut all_kinds = self.kinds.clone();
        all_kinds.extend(kinds);
        Dataset {
            names: all_names,
            kinds: all_kinds,
            features,
            labels: self.labels.clone(),
        }
    }
}

/// Reads a header-first CSV file. `binary_columns` names the features to be
/// treated as binary; every other non-label column is continuous.
pub fn ingest_csv(path: &Path, label_column: &str, binary_columns: &[String]) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_csv_reader(file, label_column, binary_columns)
}

pub fn ingest_csv_reader<R: Read>(
    reader: R,
    label_column: &str,
    binary_columns: &[String],
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| ingestion(0, "<header>", e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| ingestion(0, label_column, "label column not found in header".into()))?;
    for b in binary_columns {
        if !headers.iter().any(|h| h == b) || b == label_column {
            return Err(ingestion(0, b, "binary column is not a feature column".into()));
        }
    }

    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let kinds = names
        .iter()
        .map(|n| {
            if binary_columns.contains(n) {
                FeatureKind::Binary
            } else {
                FeatureKind::Continuous
            }
        })
        .collect();

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // Row numbers are 1-based data rows (the header is row 0).
        let row = r + 1;
        let record = record.map_err(|e| ingestion(row, "<record>", e.to_string()))?;
        if record.len() != headers.len() {
            return Err(ingestion(
                row,
                "<record>",
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                ingestion(row, &headers[c], format!("cannot parse `{cell}` as a number"))
            })?;
            if !v.is_finite() {
                return Err(ingestion(row, &headers[c], format!("non-finite value `{cell}`")));
            }
            features.push(v);
        }
    }
    if raw_labels.is_empty() {
        return Err(ingestion(0, "<data>", "file contains no data rows".into()));
    }
    if names.is_empty() {
        return Err(ingestion(0, "<header>", "file contains no feature columns".into()));
    }
    let labels = map_labels(&raw_labels, label_column)?;
    Dataset::new(names, kinds, features, labels)
}

fn ingestion(row: usize, column: &str, message: String) -> Error {
    Error::Ingestion {
        row,
        column: column.to_owned(),
        message,
    }
}

/// Maps two distinct label values to -1 (smaller) and +1 (larger), comparing
/// numerically when every label parses as a number.
fn map_labels(raw: &[String], column: &str) -> Result<Vec<f64>> {
    let mut distinct: Vec<&String> = Vec::new();
    for (i, l) in raw.iter().enumerate() {
        if !distinct.contains(&l) {
            distinct.push(l);
            if distinct.len() > 2 {
                return Err(ingestion(
                    i + 1,
                    column,
                    format!("more than two label values (found `{l}`)"),
                ));
            }
        }
    }
    if distinct.len() < 2 {
        return Err(ingestion(0, column, "labels take only one value".into()));
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    let positive_first = match numeric {
        Some(v) => v[0] > v[1],
        None => distinct[0] > distinct[1],
    };
    let positive = if positive_first { distinct[0] } else { distinct[1] };
    Ok(raw
        .iter()
        .map(|l| if l == positive { 1.0 } else { -1.0 })
        .collect())
}

fn distinct_values(col: &[f64]) -> Vec<f64> {
    let mut v = col.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Standardizes continuous features to mean 0 / sample variance 1 (divisor
/// n-1) and remaps each binary feature's two values to {0, 1}.
pub fn normalize(ds: &Dataset) -> Result<Dataset> {
    let n = ds.n_data();
    let mut out = ds.clone();
    for j in 0..ds.n_features() {
        let col = ds.column(j);
        match ds.kinds[j] {
            FeatureKind::Continuous => {
                if n < 2 {
                    return Err(Error::Normalization(format!(
                        "feature `{}` needs at least two rows to standardize",
                        ds.names[j]
                    )));
                }
                let mean = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (n - 1) as f64;
                if !(var > 0.0) {
                    return Err(Error::Normalization(format!(
                        "continuous feature `{}` has zero variance",
                        ds.names[j]
                    )));
                }
                let sd = var.sqrt();
                let scaled: Vec<f64> = col.iter().map(|v| (v - mean) / sd).collect();
                out.set_column(j, &scaled);
            }
            FeatureKind::Binary => {
                let values = distinct_values(&col);
                let mapped: Vec<f64> = match values.as_slice() {
                    [lo, _hi] => col.iter().map(|v| if v == lo { 0.0 } else { 1.0 }).collect(),
                    [only] if *only == 0.0 || *only == 1.0 => col.clone(),
                    _ => {
                        return Err(Error::Normalization(format!(
                            "binary feature `{}` takes {} distinct values",
                            ds.names[j],
                            values.len()
                        )))
                    }
                };
                out.set_column(j, &mapped);
            }
        }
    }
    Ok(out)
}

/// Names of continuous features that take exactly two distinct values.
pub fn two_valued_continuous_features(ds: &Dataset) -> Vec<String> {
    (0..ds.n_features())
        .filter(|&j| {
            ds.kinds[j] == FeatureKind::Continuous && distinct_values(&ds.column(j)).len() == 2
        })
        .map(|j| ds.names[j].clone())
        .collect()
}

/// Marks every two-valued feature as binary.
pub fn detect_binary(ds: &Dataset) -> (Dataset, Vec<String>) {
    let flagged = two_valued_continuous_features(ds);
    let mut out = ds.clone();
    for (j, name) in ds.names.iter().enumerate() {
        if flagged.contains(name) {
            out.kinds[j] = FeatureKind::Binary;
        }
    }
    (out, flagged)
}

/// Appends all pairwise products `x_i · x_j` for `i <= j` and then a constant
/// intercept column. Engineered features are continuous and left unscaled.
pub fn feature_engineer(ds: &Dataset) -> Dataset {
    let d = ds.n_features();
    let mut names = Vec::with_capacity(d * (d + 1) / 2 + 1);
    for i in 0..d {
        for j in i..d {
            names.push(format!("{}*{}", ds.names[i], ds.names[j]));
        }
    }
    names.push("intercept".to_owned());
    let kinds = vec![FeatureKind::Continuous; names.len()];
    ds.with_appended(names, kinds, |row, out| {
        for i in 0..d {
            for j in i..d {
                out.push(row[i] * row[j]);
            }
        }
        out.push(1.0);
    })
}

/// Appends a constant-1 intercept column.
pub fn add_intercept(ds: &Dataset) -> Result<Dataset> {
    if ds.n_data() == 0 || ds.n_features() == 0 {
        return Err(Error::usage("cannot add an intercept to an empty dataset"));
    }
    Ok(ds.with_appended(
        vec!["intercept".to_owned()],
        vec![FeatureKind::Continuous],
        |_, out| out.push(1.0),
    ))
}
