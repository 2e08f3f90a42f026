//! Fairness measures.
//!
//! The manifold measure compares the between-group distance computed with
//! classifier predictions (`d_f`) against the same distance computed with the
//! true labels (`d`): `d_f / d - 1`. Positive values mean the classifier adds
//! bias on top of what the data already carries; negative values mean it
//! removes some.
//!
//! The group-rate baselines (demographic parity, equal opportunity,
//! predictive quality parity) and discriminative risk live here as well.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::approx::approx_value;
use crate::dataset::{flip_binary_attribute, GroupPartition, LabelSource, LabeledDataset};
use crate::error::{Error, Result};
use crate::exact::{exact_value, ApproxParams};
use crate::seed;

/// Extended real: a finite value or positive infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FairnessValue {
    Finite(f64),
    PositiveInfinity,
}

impl FairnessValue {
    pub fn as_f64(&self) -> f64 {
        match *self {
            FairnessValue::Finite(v) => v,
            FairnessValue::PositiveInfinity => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, FairnessValue::Finite(_))
    }
}

impl fmt::Display for FairnessValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FairnessValue::Finite(v) => write!(f, "{v}"),
            FairnessValue::PositiveInfinity => f.write_str("inf"),
        }
    }
}

/// `d_f / d - 1`, with `0/0` read as no added bias and `x/0` (x > 0) as
/// unbounded.
pub fn hfm(d_f: f64, d: f64) -> Result<FairnessValue> {
    if d_f.is_nan() || d.is_nan() {
        return Err(Error::NotANumber("distance"));
    }
    if d_f < 0.0 || d < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distances must be nonnegative (d_f={d_f}, d={d})"
        )));
    }
    Ok(if d > 0.0 {
        FairnessValue::Finite(d_f / d - 1.0)
    } else if d_f == 0.0 {
        FairnessValue::Finite(0.0)
    } else {
        FairnessValue::PositiveInfinity
    })
}

/// Both distances and the resulting measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfmReport {
    pub d: f64,
    pub d_f: f64,
    pub df: FairnessValue,
}

pub fn hfm_exact(dataset: &LabeledDataset, partition: &GroupPartition) -> Result<FairnessValue> {
    hfm_exact_report(dataset, partition).map(|r| r.df)
}

pub fn hfm_exact_report(dataset: &LabeledDataset, partition: &GroupPartition) -> Result<HfmReport> {
    dataset.predictions().ok_or(Error::MissingPredictions)?;
    let d = exact_value(dataset, partition, LabelSource::TrueLabels)?;
    let d_f = exact_value(dataset, partition, LabelSource::Predictions)?;
    Ok(HfmReport {
        d,
        d_f,
        df: hfm(d_f, d)?,
    })
}

pub fn hfm_approx(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    params: ApproxParams,
) -> Result<FairnessValue> {
    hfm_approx_report(dataset, partition, params).map(|r| r.df)
}

/// `D` and `D_f` are approximated with independent projection streams whose
/// master seeds are derived from `params.seed` under the tags `"D"` and
/// `"Df"`.
pub fn hfm_approx_report(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    params: ApproxParams,
) -> Result<HfmReport> {
    dataset.predictions().ok_or(Error::MissingPredictions)?;
    let (p_d, p_f) = hfm_stream_params(params);
    let d = approx_value(dataset, partition, LabelSource::TrueLabels, p_d)?;
    let d_f = approx_value(dataset, partition, LabelSource::Predictions, p_f)?;
    Ok(HfmReport {
        d,
        d_f,
        df: hfm(d_f, d)?,
    })
}

/// Parameters of the `D` and `D_f` runs inside [`hfm_approx_report`].
pub fn hfm_stream_params(params: ApproxParams) -> (ApproxParams, ApproxParams) {
    (
        ApproxParams {
            seed: seed::tagged_seed(params.seed, "D"),
            ..params
        },
        ApproxParams {
            seed: seed::tagged_seed(params.seed, "Df"),
            ..params
        },
    )
}

/// Counts behind the group-rate measures for one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupCounts {
    pub count: usize,
    pub predicted_positive: usize,
    pub actual_positive: usize,
    pub true_positive: usize,
}

impl GroupCounts {
    pub fn positive_rate(&self) -> Option<f64> {
        ratio(self.predicted_positive, self.count)
    }

    pub fn true_positive_rate(&self) -> Option<f64> {
        ratio(self.true_positive, self.actual_positive)
    }

    pub fn precision(&self) -> Option<f64> {
        ratio(self.true_positive, self.predicted_positive)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Counts for `[group0, group1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupRates {
    pub groups: [GroupCounts; 2],
}

impl GroupRates {
    pub fn compute(
        dataset: &LabeledDataset,
        partition: &GroupPartition,
        positive_label: u32,
    ) -> Result<Self> {
        let preds = dataset.predictions().ok_or(Error::MissingPredictions)?;
        partition.ensure_nonempty()?;
        let labels = dataset.labels();
        let mut groups = [GroupCounts::default(); 2];
        for (g, idx) in [&partition.group0, &partition.group1]
            .into_iter()
            .enumerate()
        {
            let c = &mut groups[g];
            for &i in idx {
                let pred_pos = preds[i] == positive_label;
                let act_pos = labels[i] == positive_label;
                c.count += 1;
                c.predicted_positive += pred_pos as usize;
                c.actual_positive += act_pos as usize;
                c.true_positive += (pred_pos && act_pos) as usize;
            }
        }
        Ok(GroupRates { groups })
    }

    fn gap(&self, what: &str, rate: impl Fn(&GroupCounts) -> Option<f64>) -> Result<f64> {
        let r = |g: usize| {
            rate(&self.groups[g]).ok_or_else(|| {
                Error::UndefinedRate(format!("{what} in group{g} has an empty conditioning set"))
            })
        };
        Ok((r(1)? - r(0)?).abs())
    }

    pub fn demographic_parity(&self) -> Result<f64> {
        self.gap("positive-prediction rate", GroupCounts::positive_rate)
    }

    pub fn equal_opportunity(&self) -> Result<f64> {
        self.gap("true-positive rate", GroupCounts::true_positive_rate)
    }

    pub fn predictive_quality_parity(&self) -> Result<f64> {
        self.gap("precision", GroupCounts::precision)
    }
}

/// `|P(yhat = +|a = 1) - P(yhat = +|a = 0)|`.
pub fn demographic_parity(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    positive_label: u32,
) -> Result<f64> {
    GroupRates::compute(dataset, partition, positive_label)?.demographic_parity()
}

/// `|P(yhat = +|a = 1, y = +) - P(yhat = +|a = 0, y = +)|`.
pub fn equal_opportunity(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    positive_label: u32,
) -> Result<f64> {
    GroupRates::compute(dataset, partition, positive_label)?.equal_opportunity()
}

/// `|P(y = +|a = 1, yhat = +) - P(y = +|a = 0, yhat = +)|`.
pub fn predictive_quality_parity(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    positive_label: u32,
) -> Result<f64> {
    GroupRates::compute(dataset, partition, positive_label)?.predictive_quality_parity()
}

/// Fraction of rows whose prediction changes once the sensitive attributes
/// are flipped.
pub fn discriminative_risk(predictions_raw: &[u32], predictions_flipped: &[u32]) -> Result<f64> {
    if predictions_raw.len() != predictions_flipped.len() {
        return Err(Error::Dimension {
            expected: predictions_raw.len(),
            actual: predictions_flipped.len(),
        });
    }
    if predictions_raw.is_empty() {
        return Err(Error::InvalidArgument(
            "prediction vectors are empty".into(),
        ));
    }
    let changed = predictions_raw
        .iter()
        .zip(predictions_flipped)
        .filter(|(a, b)| a != b)
        .count();
    Ok(changed as f64 / predictions_raw.len() as f64)
}

/// Discriminative risk of a classifier given as a prediction function,
/// evaluated on the dataset and on a copy with attribute `attr_index`
/// flipped.
pub fn discriminative_risk_with<F>(
    dataset: &LabeledDataset,
    attr_index: usize,
    predict: F,
) -> Result<f64>
where
    F: Fn(&LabeledDataset) -> Vec<u32>,
{
    let flipped = flip_binary_attribute(dataset, attr_index)?;
    discriminative_risk(&predict(dataset), &predict(&flipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::partition_by_attribute;

    #[test]
    fn hfm_degenerate_cases() {
        assert_eq!(hfm(0.3, 0.3).unwrap(), FairnessValue::Finite(0.0));
        assert_eq!(hfm(0.0, 0.0).unwrap(), FairnessValue::Finite(0.0));
        assert_eq!(hfm(0.1, 0.0).unwrap(), FairnessValue::PositiveInfinity);
        assert_eq!(hfm(0.5, 0.25).unwrap(), FairnessValue::Finite(1.0));
        assert!(hfm(0.1, 0.2).unwrap().as_f64() < 0.0);
        assert!(hfm(-0.1, 0.2).is_err());
        assert!(hfm(0.1, -0.2).is_err());
    }

    #[test]
    fn dr_examples() {
        assert_eq!(discriminative_risk(&[1, 2, 1], &[1, 2, 1]).unwrap(), 0.0);
        assert_eq!(discriminative_risk(&[1, 2, 1], &[2, 1, 2]).unwrap(), 1.0);
        let a = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let b = [1, 2, 1, 1, 1, 2, 2, 1, 2, 2];
        assert!((discriminative_risk(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        assert!(discriminative_risk(&a, &b[..9]).is_err());
    }

    #[test]
    fn dr_callback_uses_flipped_copy() {
        let d = LabeledDataset::new(
            vec![vec![0.0], vec![0.5], vec![1.0], vec![0.2]],
            vec![vec![0], vec![1], vec![1], vec![0]],
            vec![1, 2, 2, 1],
            None,
            2,
        )
        .unwrap();
        // Predicts class 2 for privileged rows only: every prediction flips.
        let dr = discriminative_risk_with(&d, 0, |ds| {
            ds.attr_column(0).iter().map(|&a| a + 1).collect()
        })
        .unwrap();
        assert_eq!(dr, 1.0);
        // Ignores the attribute: nothing flips.
        let dr = discriminative_risk_with(&d, 0, |ds| ds.labels().to_vec()).unwrap();
        assert_eq!(dr, 0.0);
    }

    fn rates_fixture(
        attrs: &[u32],
        labels: &[u32],
        preds: &[u32],
    ) -> (LabeledDataset, GroupPartition) {
        let n = attrs.len();
        let d = LabeledDataset::new(
            vec![vec![0.5]; n],
            attrs.iter().map(|&a| vec![a]).collect(),
            labels.to_vec(),
            Some(preds.to_vec()),
            2,
        )
        .unwrap();
        let p = partition_by_attribute(&d, 0).unwrap();
        (d, p)
    }

    #[test]
    fn demographic_parity_eight_rows() {
        // group1 (rows 0..4): predictions 2,2,2,1 -> 3/4 positive.
        // group0 (rows 4..8): predictions 2,1,2,1 -> 1/2 positive.
        let (d, p) = rates_fixture(
            &[1, 1, 1, 1, 0, 0, 0, 0],
            &[1, 1, 1, 1, 1, 1, 1, 1],
            &[2, 2, 2, 1, 2, 1, 2, 1],
        );
        assert!((demographic_parity(&d, &p, 2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn extremes_and_undefined_rates() {
        let (d, p) = rates_fixture(&[1, 1, 0, 0], &[2, 2, 1, 1], &[2, 2, 1, 1]);
        assert_eq!(demographic_parity(&d, &p, 2).unwrap(), 1.0);
        // group0 has no positive labels and no positive predictions.
        assert!(matches!(
            equal_opportunity(&d, &p, 2),
            Err(Error::UndefinedRate(_))
        ));
        assert!(matches!(
            predictive_quality_parity(&d, &p, 2),
            Err(Error::UndefinedRate(_))
        ));
    }

    #[test]
    fn equal_opportunity_thirds() {
        // group1: 3 positives, 2 predicted positive. group0: 3 positives, 1 predicted positive.
        let (d, p) = rates_fixture(
            &[1, 1, 1, 0, 0, 0],
            &[2, 2, 2, 2, 2, 2],
            &[2, 2, 1, 2, 1, 1],
        );
        assert!((equal_opportunity(&d, &p, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pqp_half() {
        // group1: predicted positive rows 0,1 both truly positive -> 1.0.
        // group0: predicted positive rows 2,3, one truly positive -> 0.5.
        let (d, p) = rates_fixture(&[1, 1, 0, 0], &[2, 2, 2, 1], &[2, 2, 2, 2]);
        assert!((predictive_quality_parity(&d, &p, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(
            predictive_quality_parity(&d, &p.swapped(), 2).unwrap(),
            predictive_quality_parity(&d, &p, 2).unwrap()
        );
    }

    #[test]
    fn missing_predictions() {
        let d = LabeledDataset::new(
            vec![vec![0.5], vec![0.1]],
            vec![vec![0], vec![1]],
            vec![1, 2],
            None,
            2,
        )
        .unwrap();
        let p = partition_by_attribute(&d, 0).unwrap();
        assert_eq!(
            demographic_parity(&d, &p, 2),
            Err(Error::MissingPredictions)
        );
        assert_eq!(hfm_exact(&d, &p), Err(Error::MissingPredictions));
    }
}
