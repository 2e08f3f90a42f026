//! Tabular data model: scaled insensitive features, binary sensitive
//! attributes, integer class labels and optional classifier predictions.
//!
//! A [`LabeledDataset`] is immutable once built. Every operation here returns
//! a new value and never touches its input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which label column fills the label slot of the point metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    TrueLabels,
    Predictions,
}

impl LabelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelSource::TrueLabels => "true_labels",
            LabelSource::Predictions => "predictions",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    n_rows: usize,
    n_features: usize,
    n_attrs: usize,
    n_classes: u32,
    /// Row-major, `n_rows * n_features`.
    features: Vec<f64>,
    /// Row-major, `n_rows * n_attrs`.
    sensitive: Vec<u32>,
    labels: Vec<u32>,
    predictions: Option<Vec<u32>>,
}

impl LabeledDataset {
    /// Builds a dataset from row-major feature and attribute matrices.
    ///
    /// Labels and predictions must lie in `1..=n_classes`, features in
    /// `[0, 1]`.
    pub fn new(
        features: Vec<Vec<f64>>,
        sensitive: Vec<Vec<u32>>,
        labels: Vec<u32>,
        predictions: Option<Vec<u32>>,
        n_classes: u32,
    ) -> Result<Self> {
        let n_rows = labels.len();
        if n_rows == 0 {
            return Err(Error::InvalidArgument(
                "dataset must have at least one row".into(),
            ));
        }
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least two classes, got {n_classes}"
            )));
        }
        check_len(features.len(), n_rows)?;
        check_len(sensitive.len(), n_rows)?;
        let n_features = features[0].len();
        let n_attrs = sensitive[0].len();

        let mut flat_x = Vec::with_capacity(n_rows * n_features);
        for row in &features {
            check_len(row.len(), n_features)?;
            for &v in row {
                if v.is_nan() {
                    return Err(Error::NotANumber("features"));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "feature value {v} outside [0, 1]"
                    )));
                }
            }
            flat_x.extend_from_slice(row);
        }
        let mut flat_a = Vec::with_capacity(n_rows * n_attrs);
        for row in &sensitive {
            check_len(row.len(), n_attrs)?;
            flat_a.extend_from_slice(row);
        }
        check_classes(&labels, n_classes, "label")?;
        if let Some(p) = &predictions {
            check_len(p.len(), n_rows)?;
            check_classes(p, n_classes, "prediction")?;
        }

        Ok(LabeledDataset {
            n_rows,
            n_features,
            n_attrs,
            n_classes,
            features: flat_x,
            sensitive: flat_a,
            labels,
            predictions,
        })
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_attrs(&self) -> usize {
        self.n_attrs
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn attr(&self, row: usize, attr: usize) -> u32 {
        self.sensitive[row * self.n_attrs + attr]
    }

    pub fn attr_column(&self, attr: usize) -> Vec<u32> {
        (0..self.n_rows).map(|i| self.attr(i, attr)).collect()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn predictions(&self) -> Option<&[u32]> {
        self.predictions.as_deref()
    }

    /// The label slot selected by `source`.
    pub fn label_slot(&self, source: LabelSource) -> Result<&[u32]> {
        match source {
            LabelSource::TrueLabels => Ok(&self.labels),
            LabelSource::Predictions => self.predictions().ok_or(Error::MissingPredictions),
        }
    }

    /// Returns a copy with the prediction column replaced.
    pub fn with_predictions(&self, predictions: Vec<u32>) -> Result<Self> {
        check_len(predictions.len(), self.n_rows)?;
        check_classes(&predictions, self.n_classes, "prediction")?;
        Ok(LabeledDataset {
            predictions: Some(predictions),
            ..self.clone()
        })
    }

    fn check_attr_index(&self, attr: usize) -> Result<()> {
        if attr >= self.n_attrs {
            return Err(Error::InvalidArgument(format!(
                "attribute index {attr} out of range (dataset has {})",
                self.n_attrs
            )));
        }
        Ok(())
    }

    fn check_binary(&self, attr: usize) -> Result<()> {
        self.check_attr_index(attr)?;
        match (0..self.n_rows)
            .map(|i| self.attr(i, attr))
            .find(|&v| v > 1)
        {
            Some(value) => Err(Error::UnsupportedAttributeArity {
                column: attr,
                value,
            }),
            None => Ok(()),
        }
    }
}

fn check_len(actual: usize, expected: usize) -> Result<()> {
    if actual != expected {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

fn check_classes(values: &[u32], n_classes: u32, what: &str) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| v < 1 || v > n_classes) {
        return Err(Error::InvalidArgument(format!(
            "{what} {v} outside 1..={n_classes}"
        )));
    }
    Ok(())
}

/// Row indices split into the unprivileged (`group0`) and privileged
/// (`group1`) sides of one sensitive attribute or attribute combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub attr_indices: Vec<usize>,
    pub group0: Vec<usize>,
    pub group1: Vec<usize>,
}

impl GroupPartition {
    /// Builds a partition from a per-row membership flag (`true` = group1).
    pub fn from_membership(
        attr_indices: Vec<usize>,
        in_group1: impl Iterator<Item = bool>,
    ) -> Self {
        let mut group0 = Vec::new();
        let mut group1 = Vec::new();
        for (i, g1) in in_group1.enumerate() {
            if g1 {
                group1.push(i);
            } else {
                group0.push(i);
            }
        }
        GroupPartition {
            attr_indices,
            group0,
            group1,
        }
    }

    pub fn sizes(&self) -> (usize, usize) {
        (self.group0.len(), self.group1.len())
    }

    /// True when one side has no members; such partitions are rejected by
    /// the distance and rate computations.
    pub fn is_degenerate(&self) -> bool {
        self.group0.is_empty() || self.group1.is_empty()
    }

    pub fn ensure_nonempty(&self) -> Result<()> {
        if self.group0.is_empty() {
            return Err(Error::EmptyGroup(0));
        }
        if self.group1.is_empty() {
            return Err(Error::EmptyGroup(1));
        }
        Ok(())
    }

    /// Per-row membership flag for a dataset of `n` rows.
    pub fn membership(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.group1 {
            m[i] = true;
        }
        m
    }

    pub fn swapped(&self) -> Self {
        GroupPartition {
            attr_indices: self.attr_indices.clone(),
            group0: self.group1.clone(),
            group1: self.group0.clone(),
        }
    }
}

pub fn partition_by_attribute(
    dataset: &LabeledDataset,
    attr_index: usize,
) -> Result<GroupPartition> {
    dataset.check_binary(attr_index)?;
    Ok(GroupPartition::from_membership(
        vec![attr_index],
        (0..dataset.len()).map(|i| dataset.attr(i, attr_index) == 1),
    ))
}

/// Privileged side = rows privileged in every listed attribute.
pub fn joint_partition(dataset: &LabeledDataset, attr_indices: &[usize]) -> Result<GroupPartition> {
    if attr_indices.is_empty() {
        return Err(Error::InvalidArgument(
            "joint partition needs at least one attribute".into(),
        ));
    }
    for &a in attr_indices {
        dataset.check_binary(a)?;
    }
    Ok(GroupPartition::from_membership(
        attr_indices.to_vec(),
        (0..dataset.len()).map(|i| attr_indices.iter().all(|&a| dataset.attr(i, a) == 1)),
    ))
}

/// One-vs-rest split of a possibly multi-valued attribute: rows whose value
/// equals `value` form group1. Experimental extension for non-binary
/// attributes.
pub fn partition_one_vs_rest(
    dataset: &LabeledDataset,
    attr_index: usize,
    value: u32,
) -> Result<GroupPartition> {
    dataset.check_attr_index(attr_index)?;
    Ok(GroupPartition::from_membership(
        vec![attr_index],
        (0..dataset.len()).map(|i| dataset.attr(i, attr_index) == value),
    ))
}

/// Copy of `dataset` with attribute column `attr_index` mapped 0 <-> 1.
pub fn flip_binary_attribute(
    dataset: &LabeledDataset,
    attr_index: usize,
) -> Result<LabeledDataset> {
    dataset.check_binary(attr_index)?;
    let mut out = dataset.clone();
    for row in 0..out.n_rows {
        let cell = &mut out.sensitive[row * out.n_attrs + attr_index];
        *cell = 1 - *cell;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(attrs: Vec<Vec<u32>>) -> LabeledDataset {
        let n = attrs.len();
        LabeledDataset::new(
            (0..n).map(|i| vec![i as f64 / n as f64]).collect(),
            attrs,
            vec![1; n],
            None,
            2,
        )
        .unwrap()
    }

    #[test]
    fn partition_four_rows() {
        let d = ds(vec![vec![0], vec![1], vec![1], vec![0]]);
        let p = partition_by_attribute(&d, 0).unwrap();
        assert_eq!(p.group0, vec![0, 3]);
        assert_eq!(p.group1, vec![1, 2]);
    }

    #[test]
    fn all_privileged_is_valid_but_degenerate() {
        let d = ds(vec![vec![1], vec![1], vec![1]]);
        let p = partition_by_attribute(&d, 0).unwrap();
        assert!(p.group0.is_empty());
        assert!(p.is_degenerate());
        assert_eq!(p.ensure_nonempty(), Err(Error::EmptyGroup(0)));
    }

    #[test]
    fn six_row_fixture_sizes() {
        let d = ds([1, 0, 1, 0, 0, 1].iter().map(|&a| vec![a]).collect());
        assert_eq!(partition_by_attribute(&d, 0).unwrap().sizes(), (3, 3));
    }

    #[test]
    fn non_binary_column_rejected() {
        let d = ds(vec![vec![0], vec![2]]);
        assert_eq!(
            partition_by_attribute(&d, 0),
            Err(Error::UnsupportedAttributeArity {
                column: 0,
                value: 2
            })
        );
        assert!(flip_binary_attribute(&d, 0).is_err());
        let p = partition_one_vs_rest(&d, 0, 2).unwrap();
        assert_eq!(p.group1, vec![1]);
    }

    #[test]
    fn joint_partition_is_and() {
        let d = ds(vec![vec![1, 1], vec![1, 0], vec![0, 1]]);
        let p = joint_partition(&d, &[0, 1]).unwrap();
        assert_eq!(p.group1, vec![0]);
        assert_eq!(p.group0, vec![1, 2]);
        assert!(joint_partition(&d, &[]).is_err());
        assert_eq!(
            joint_partition(&d, &[1]).unwrap(),
            partition_by_attribute(&d, 1).unwrap()
        );
    }

    #[test]
    fn joint_partition_five_row_fixture() {
        let d = ds(vec![
            vec![1, 1],
            vec![0, 1],
            vec![1, 1],
            vec![1, 0],
            vec![0, 0],
        ]);
        assert_eq!(joint_partition(&d, &[0, 1]).unwrap().group1.len(), 2);
    }

    #[test]
    fn flip_is_involution_and_isolated() {
        let d = ds(vec![vec![0, 1], vec![1, 1], vec![0, 0]]);
        let f = flip_binary_attribute(&d, 0).unwrap();
        assert_eq!(f.attr_column(0), vec![1, 0, 1]);
        assert_eq!(f.attr_column(1), d.attr_column(1));
        assert_eq!(f.labels(), d.labels());
        assert_eq!(f.features, d.features);
        assert_eq!(flip_binary_attribute(&f, 0).unwrap(), d);
    }

    #[test]
    fn constructor_validation() {
        assert!(LabeledDataset::new(vec![vec![1.5]], vec![vec![0]], vec![1], None, 2).is_err());
        assert!(LabeledDataset::new(vec![vec![0.5]], vec![vec![0]], vec![3], None, 2).is_err());
        assert!(
            LabeledDataset::new(vec![vec![0.5]], vec![vec![0]], vec![1], Some(vec![0]), 2).is_err()
        );
        assert!(LabeledDataset::new(
            vec![vec![0.5], vec![0.1, 0.2]],
            vec![vec![0], vec![1]],
            vec![1, 1],
            None,
            2
        )
        .is_err());
        assert_eq!(
            LabeledDataset::new(vec![vec![0.5]], vec![vec![0]], vec![1], None, 2)
                .unwrap()
                .label_slot(LabelSource::Predictions),
            Err(Error::MissingPredictions)
        );
    }
}
