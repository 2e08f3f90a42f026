use clap::{Args, ValueEnum};
use hfm_core::io::{load_csv, DatasetSchema, LoadedDataset, SensitiveColumn};
use hfm_core::report::ReportFormat;
use hfm_core::{joint_partition, partition_by_attribute, GroupPartition};

use crate::CliError;

/// Input file and column mapping.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: std::path::PathBuf,
    /// Insensitive feature columns (min-max scaled to [0, 1] on load).
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<String>,
    /// Sensitive attribute columns.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sensitive: Vec<String>,
    /// Privileged value of each sensitive column, in the same order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub privileged: Vec<String>,
    /// True label column.
    #[arg(long)]
    pub label: String,
    /// Classifier prediction column.
    #[arg(long)]
    pub prediction: Option<String>,
    /// Predictions made with the sensitive attributes flipped (for DR).
    #[arg(long)]
    pub prediction_flipped: Option<String>,
    /// Raw value of the positive class for DP/EO/PQP.
    #[arg(long)]
    pub positive_label: Option<String>,
    /// Ordered class values; the i-th maps to class i+1. Needed when labels
    /// are textual or start at 0.
    #[arg(long, value_delimiter = ',')]
    pub label_values: Option<Vec<String>>,
    /// Sensitive column (name or 0-based index) defining the two groups;
    /// the first one when omitted.
    #[arg(long, conflicts_with = "joint")]
    pub attr: Option<String>,
    /// Privileged group = rows privileged in all of these sensitive columns.
    #[arg(long, value_delimiter = ',')]
    pub joint: Option<Vec<String>>,
}

impl DataArgs {
    pub fn schema(&self) -> Result<DatasetSchema, CliError> {
        if self.sensitive.len() != self.privileged.len() {
            return Err(CliError::input(format!(
                "--sensitive lists {} columns but --privileged lists {} values",
                self.sensitive.len(),
                self.privileged.len()
            )));
        }
        Ok(DatasetSchema {
            feature_columns: self.features.clone(),
            sensitive_columns: self
                .sensitive
                .iter()
                .zip(&self.privileged)
                .map(|(name, value)| SensitiveColumn {
                    name: name.clone(),
                    privileged_value: value.clone(),
                })
                .collect(),
            label_column: self.label.clone(),
            prediction_column: self.prediction.clone(),
            flipped_prediction_column: self.prediction_flipped.clone(),
            label_values: self.label_values.clone(),
            positive_label: self.positive_label.clone(),
        })
    }

    pub fn load(&self) -> Result<LoadedDataset, CliError> {
        load_csv(&self.input, &self.schema()?).map_err(CliError::from)
    }

    fn attr_index(&self, key: &str) -> Result<usize, CliError> {
        if let Some(i) = self.sensitive.iter().position(|s| s == key) {
            return Ok(i);
        }
        match key.parse::<usize>() {
            Ok(i) if i < self.sensitive.len() => Ok(i),
            _ => Err(CliError::input(format!(
                "unknown sensitive attribute '{key}'"
            ))),
        }
    }

    pub fn partition(&self, loaded: &LoadedDataset) -> Result<GroupPartition, CliError> {
        let p = match &self.joint {
            Some(keys) => {
                let idx = keys
                    .iter()
                    .map(|k| self.attr_index(k))
                    .collect::<Result<Vec<_>, _>>()?;
                joint_partition(&loaded.dataset, &idx)?
            }
            None => partition_by_attribute(
                &loaded.dataset,
                self.attr_index(self.attr.as_deref().unwrap_or("0"))?,
            )?,
        };
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report file; the report goes to standard output when omitted.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Write 0 for every wall-clock field so reports are byte-stable.
    #[arg(long)]
    pub reproducible: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    /// Number of random projections.
    #[arg(long, default_value_t = hfm_core::approx::DEFAULT_M1)]
    pub m1: usize,
    /// Opposite-group neighbors scanned per direction; defaults to
    /// ceil(2 log10 n).
    #[arg(long)]
    pub m2: Option<usize>,
    /// Master seed for every random stream.
    #[arg(long, default_value_t = hfm_core::approx::DEFAULT_SEED)]
    pub seed: u64,
}

impl ApproxArgs {
    pub fn resolve(&self, n: usize) -> hfm_core::ApproxParams {
        hfm_core::ApproxParams {
            m1: self.m1,
            m2: self.m2.unwrap_or_else(|| hfm_core::default_m2(n)),
            seed: self.seed,
        }
    }
}
