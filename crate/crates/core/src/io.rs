//! CSV ingestion with per-column min-max scaling of insensitive features.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Cell contents treated as missing.
const MISSING_MARKERS: [&str; 4] = ["", "?", "NA", "NaN"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveColumn {
    pub name: String,
    /// Cells equal to this value encode as 1, every other value as 0.
    pub privileged_value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub feature_columns: Vec<String>,
    pub sensitive_columns: Vec<SensitiveColumn>,
    pub label_column: String,
    pub prediction_column: Option<String>,
    /// Predictions made on the attribute-flipped copy of the data, used for
    /// discriminative risk.
    pub flipped_prediction_column: Option<String>,
    /// Ordered class values; the i-th entry encodes as class `i + 1`. When
    /// absent, label cells must be integers `>= 1`.
    pub label_values: Option<Vec<String>>,
    /// Raw value of the positive class for the group-rate measures.
    pub positive_label: Option<String>,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::SchemaMismatch(
                "at least one feature column is required".into(),
            ));
        }
        if self.sensitive_columns.is_empty() {
            return Err(Error::SchemaMismatch(
                "at least one sensitive column is required".into(),
            ));
        }
        if self.label_column.is_empty() {
            return Err(Error::SchemaMismatch("label column is required".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let names = self
            .feature_columns
            .iter()
            .chain(self.sensitive_columns.iter().map(|s| &s.name))
            .chain(std::iter::once(&self.label_column))
            .chain(self.prediction_column.iter())
            .chain(self.flipped_prediction_column.iter());
        for name in names {
            if !seen.insert(name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "column '{name}' listed more than once"
                )));
            }
        }
        if let Some(values) = &self.label_values {
            if values.len() < 2 {
                return Err(Error::SchemaMismatch(
                    "label value list needs at least two classes".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalingReport {
    pub ranges: Vec<ColumnRange>,
    /// Columns with `max == min`; their values scale to 0.
    pub constant_columns: Vec<String>,
}

/// Result of [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: LabeledDataset,
    pub scaling: ScalingReport,
    pub flipped_predictions: Option<Vec<u32>>,
    /// Class code of `schema.positive_label`, when given.
    pub positive_label: Option<u32>,
}

/// Scales each column to `[0, 1]` in place: `(x - min) / (max - min)`,
/// constant columns to 0.
pub fn min_max_scale(names: &[String], columns: &mut [Vec<f64>]) -> ScalingReport {
    let mut report = ScalingReport::default();
    for (name, col) in names.iter().zip(columns.iter_mut()) {
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = max - min;
        if span > 0.0 {
            for v in col.iter_mut() {
                *v = (*v - min) / span;
            }
        } else {
            col.iter_mut().for_each(|v| *v = 0.0);
            report.constant_columns.push(name.clone());
        }
        report.ranges.push(ColumnRange {
            name: name.clone(),
            min,
            max,
        });
    }
    report
}

struct LabelEncoder<'a> {
    values: Option<&'a [String]>,
}

impl LabelEncoder<'_> {
    fn encode(&self, raw: &str) -> std::result::Result<u32, String> {
        match self.values {
            Some(values) => values
                .iter()
                .position(|v| v == raw)
                .map(|i| i as u32 + 1)
                .ok_or_else(|| format!("value '{raw}' not in the declared label values")),
            None => match raw.parse::<u32>() {
                Ok(v) if v >= 1 => Ok(v),
                Ok(_) => Err("integer labels must be >= 1; declare label values to remap".into()),
                Err(e) => Err(format!("not an integer label: {e}")),
            },
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<LoadedDataset> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, schema)
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(reader: R, schema: &DatasetSchema) -> Result<LoadedDataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim(), i))
        .collect();
    let col = |name: &str| -> Result<usize> {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::SchemaMismatch(format!("column '{name}' not found in header")))
    };
    let feat_idx: Vec<usize> = schema
        .feature_columns
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let sens_idx: Vec<usize> = schema
        .sensitive_columns
        .iter()
        .map(|c| col(&c.name))
        .collect::<Result<_>>()?;
    let label_idx = col(&schema.label_column)?;
    let pred_idx = schema.prediction_column.as_deref().map(col).transpose()?;
    let flip_idx = schema
        .flipped_prediction_column
        .as_deref()
        .map(col)
        .transpose()?;

    let encoder = LabelEncoder {
        values: schema.label_values.as_deref(),
    };
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feat_idx.len()];
    let mut sensitive = Vec::new();
    let mut labels = Vec::new();
    let mut preds = Vec::new();
    let mut flipped = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |i: usize, name: &str| -> Result<&str> {
            let v = record.get(i).map(str::trim).unwrap_or("");
            if MISSING_MARKERS.contains(&v) {
                return Err(Error::MissingValue {
                    row,
                    column: name.to_string(),
                });
            }
            Ok(v)
        };
        let parse_err = |name: &str, message: String| Error::Parse {
            row,
            column: name.to_string(),
            message,
        };
        for ((&i, name), out) in feat_idx
            .iter()
            .zip(&schema.feature_columns)
            .zip(columns.iter_mut())
        {
            let raw = cell(i, name)?;
            let v: f64 = raw.parse().map_err(|e| parse_err(name, format!("{e}")))?;
            if !v.is_finite() {
                return Err(parse_err(name, format!("non-finite value '{raw}'")));
            }
            out.push(v);
        }
        let mut attrs = Vec::with_capacity(sens_idx.len());
        for (&i, s) in sens_idx.iter().zip(&schema.sensitive_columns) {
            attrs.push((cell(i, &s.name)? == s.privileged_value) as u32);
        }
        sensitive.push(attrs);
        let label_name = &schema.label_column;
        labels.push(
            encoder
                .encode(cell(label_idx, label_name)?)
                .map_err(|m| parse_err(label_name, m))?,
        );
        if let (Some(i), Some(name)) = (pred_idx, &schema.prediction_column) {
            preds.push(
                encoder
                    .encode(cell(i, name)?)
                    .map_err(|m| parse_err(name, m))?,
            );
        }
        if let (Some(i), Some(name)) = (flip_idx, &schema.flipped_prediction_column) {
            flipped.push(
                encoder
                    .encode(cell(i, name)?)
                    .map_err(|m| parse_err(name, m))?,
            );
        }
    }
    if labels.is_empty() {
        return Err(Error::SchemaMismatch("file has no data rows".into()));
    }

    let n_classes = match &schema.label_values {
        Some(values) => values.len() as u32,
        None => labels
            .iter()
            .chain(&preds)
            .chain(&flipped)
            .copied()
            .max()
            .unwrap_or(1)
            .max(2),
    };
    let positive_label = schema
        .positive_label
        .as_deref()
        .map(|raw| {
            encoder
                .encode(raw)
                .map_err(|m| Error::SchemaMismatch(format!("positive label: {m}")))
        })
        .transpose()?;

    let scaling = min_max_scale(&schema.feature_columns, &mut columns);
    let n = labels.len();
    let features: Vec<Vec<f64>> = (0..n)
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    let dataset = LabeledDataset::new(
        features,
        sensitive,
        labels,
        pred_idx.map(|_| preds),
        n_classes,
    )?;
    Ok(LoadedDataset {
        dataset,
        scaling,
        flipped_predictions: flip_idx.map(|_| flipped),
        positive_label,
    })
}
