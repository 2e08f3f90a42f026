//! Exact-versus-approximate comparison sweeps and synthetic data.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{approx_value, default_m2, DEFAULT_M1, DEFAULT_SEED};
use crate::dataset::{partition_by_attribute, GroupPartition, LabelSource, LabeledDataset};
use crate::error::{Error, Result};
use crate::exact::{exact_value, ApproxParams};
use crate::report::{Record, Value};
use crate::seed;

/// Floor of the relative-difference denominator.
pub const REL_DIFF_EPS: f64 = 1e-12;

/// Spread of each synthetic cluster when `separation > 0`.
const CLUSTER_SD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub n_features: usize,
    /// Share of rows in the privileged group.
    pub group_fraction: f64,
    pub n_classes: u32,
    /// 0 draws features uniformly; a positive value draws each group from a
    /// clipped Gaussian centred `separation / 2` away from 0.5.
    pub separation: f64,
    /// When set, predictions are the labels with this fraction of rows
    /// replaced by a uniformly drawn class.
    pub prediction_noise: Option<f64>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn uniform(n: usize, n_features: usize, group_fraction: f64, seed: u64) -> Self {
        SynthSpec {
            n,
            n_features,
            group_fraction,
            n_classes: 2,
            separation: 0.0,
            prediction_noise: None,
            seed,
        }
    }

    /// Privileged-group size: `round(n * group_fraction)`, kept within
    /// `[1, n - 1]`.
    pub fn group1_size(&self) -> usize {
        ((self.n as f64 * self.group_fraction).round() as usize).clamp(1, self.n - 1)
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n_features == 0 || self.n_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "synthetic spec needs n >= 2, n_features >= 1, n_classes >= 2 (got {}, {}, {})",
                self.n, self.n_features, self.n_classes
            )));
        }
        if !(self.group_fraction > 0.0 && self.group_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "group fraction must lie in (0, 1), got {}",
                self.group_fraction
            )));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidArgument(
                "separation must be finite and nonnegative".into(),
            ));
        }
        if let Some(p) = self.prediction_noise {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "prediction noise {p} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Dataset with one binary sensitive column; deterministic in `spec.seed`.
pub fn synth_dataset(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = seed::rng_for(spec.seed);
    let n1 = spec.group1_size();
    let mut attrs: Vec<u32> = (0..spec.n).map(|i| (i < n1) as u32).collect();
    attrs.shuffle(&mut rng);

    let noise = Normal::new(0.0, CLUSTER_SD).expect("valid sd");
    let features: Vec<Vec<f64>> = attrs
        .iter()
        .map(|&a| {
            (0..spec.n_features)
                .map(|_| {
                    if spec.separation > 0.0 {
                        let centre = 0.5 + if a == 1 { 0.5 } else { -0.5 } * spec.separation;
                        (centre + noise.sample(&mut rng)).clamp(0.0, 1.0)
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    let labels: Vec<u32> = (0..spec.n)
        .map(|_| rng.gen_range(1..=spec.n_classes))
        .collect();
    let predictions = spec.prediction_noise.map(|p| {
        labels
            .iter()
            .map(|&y| {
                if rng.gen::<f64>() < p {
                    rng.gen_range(1..=spec.n_classes)
                } else {
                    y
                }
            })
            .collect()
    });
    LabeledDataset::new(
        features,
        attrs.into_iter().map(|a| vec![a]).collect(),
        labels,
        predictions,
        spec.n_classes,
    )
}

/// A named dataset and the partition to measure.
#[derive(Debug, Clone)]
pub struct BenchCase {
    pub id: String,
    pub dataset: LabeledDataset,
    pub partition: GroupPartition,
}

impl BenchCase {
    /// Partition on the first sensitive attribute.
    pub fn from_dataset(id: impl Into<String>, dataset: LabeledDataset) -> Result<Self> {
        let partition = partition_by_attribute(&dataset, 0)?;
        Ok(BenchCase {
            id: id.into(),
            dataset,
            partition,
        })
    }
}

/// One point of the parameter grid; `m2 = None` resolves to
/// [`default_m2`] of each dataset's size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub m1: usize,
    pub m2: Option<usize>,
    pub seed: u64,
}

impl Default for GridPoint {
    fn default() -> Self {
        GridPoint {
            m1: DEFAULT_M1,
            m2: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl GridPoint {
    pub fn resolve(&self, n: usize) -> ApproxParams {
        ApproxParams {
            m1: self.m1,
            m2: self.m2.unwrap_or_else(|| default_m2(n)),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub exact: f64,
    pub approx: f64,
    pub exact_time: Duration,
    pub approx_time: Duration,
}

impl Measurement {
    /// `(approx - exact) / max(exact, eps)`.
    pub fn relative_difference(&self) -> f64 {
        (self.approx - self.exact) / self.exact.max(REL_DIFF_EPS)
    }

    pub fn speedup(&self) -> f64 {
        self.exact_time.as_secs_f64() / self.approx_time.as_secs_f64().max(1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset_id: String,
    pub n: usize,
    pub n_features: usize,
    pub n0: usize,
    pub n1: usize,
    pub label_source: LabelSource,
    pub params: ApproxParams,
    /// `Err` carries the message of a failed distance computation.
    pub outcome: std::result::Result<Measurement, String>,
}

impl ComparisonRow {
    pub fn measurement(&self) -> Option<&Measurement> {
        self.outcome.as_ref().ok()
    }
}

impl Record for ComparisonRow {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        let m = self.measurement();
        vec![
            ("dataset_id", self.dataset_id.clone().into()),
            ("n", self.n.into()),
            ("n_x", self.n_features.into()),
            ("n0", self.n0.into()),
            ("n1", self.n1.into()),
            ("label_source", self.label_source.as_str().into()),
            ("m1", self.params.m1.into()),
            ("m2", self.params.m2.into()),
            ("seed", self.params.seed.into()),
            ("exact", m.map(|m| m.exact).into()),
            ("approx", m.map(|m| m.approx).into()),
            (
                "relative_difference",
                m.map(|m| m.relative_difference()).into(),
            ),
            ("exact_ns", m.map(|m| m.exact_time.as_nanos() as u64).into()),
            (
                "approx_ns",
                m.map(|m| m.approx_time.as_nanos() as u64).into(),
            ),
            ("error", self.outcome.as_ref().err().cloned().into()),
        ]
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, Duration)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed()))
}

fn measure(case: &BenchCase, source: LabelSource, params: ApproxParams) -> Result<Measurement> {
    let (exact, exact_time) = timed(|| exact_value(&case.dataset, &case.partition, source))?;
    let (approx, approx_time) =
        timed(|| approx_value(&case.dataset, &case.partition, source, params))?;
    Ok(Measurement {
        exact,
        approx,
        exact_time,
        approx_time,
    })
}

/// One row per (case, grid point, label source), in that nesting order.
/// Predictions are measured only for cases that carry them.
///
/// Rows run in parallel, but each row's exact and approximate computations
/// run on a dedicated single-thread pool so their wall-clock times compare
/// like for like. A failing row records its error instead of aborting the
/// sweep.
pub fn run_comparison(cases: &[BenchCase], grid: &[GridPoint]) -> Vec<ComparisonRow> {
    let mut tasks = Vec::new();
    for case in cases {
        for point in grid {
            for source in [LabelSource::TrueLabels, LabelSource::Predictions] {
                if source == LabelSource::Predictions && case.dataset.predictions().is_none() {
                    continue;
                }
                tasks.push((case, *point, source));
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(case, point, source)| {
            let params = point.resolve(case.dataset.len());
            let outcome = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .map_err(|e| Error::Io(e.to_string()))
                .and_then(|pool| pool.install(|| measure(case, source, params)))
                .map_err(|e| e.to_string());
            let (n0, n1) = case.partition.sizes();
            ComparisonRow {
                dataset_id: case.id.clone(),
                n: case.dataset.len(),
                n_features: case.dataset.n_features(),
                n0,
                n1,
                label_source: source,
                params,
                outcome,
            }
        })
        .collect()
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "correlation needs at least two points".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Median of a nonempty slice (mean of the two middle values for even
/// lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub rows: usize,
    pub failed: usize,
    pub pearson: Option<f64>,
    pub max_relative_difference: Option<f64>,
    pub median_relative_difference: Option<f64>,
    pub mean_speedup: Option<f64>,
    /// Rows where the approximation fell below the exact value by more
    /// than 1e-9.
    pub overestimation_violations: usize,
}

impl ComparisonSummary {
    pub fn from_rows(rows: &[ComparisonRow]) -> Self {
        let ok: Vec<&Measurement> = rows.iter().filter_map(ComparisonRow::measurement).collect();
        let exact: Vec<f64> = ok.iter().map(|m| m.exact).collect();
        let approx: Vec<f64> = ok.iter().map(|m| m.approx).collect();
        let rel: Vec<f64> = ok.iter().map(|m| m.relative_difference()).collect();
        ComparisonSummary {
            rows: rows.len(),
            failed: rows.len() - ok.len(),
            pearson: pearson(&exact, &approx).ok(),
            max_relative_difference: rel.iter().copied().reduce(f64::max),
            median_relative_difference: median(&rel),
            mean_speedup: (!ok.is_empty())
                .then(|| ok.iter().map(|m| m.speedup()).sum::<f64>() / ok.len() as f64),
            overestimation_violations: ok.iter().filter(|m| m.approx < m.exact - 1e-9).count(),
        }
    }
}

impl Record for ComparisonSummary {
    fn fields(&self) -> Vec<(&'static str, Value)> {
        vec![
            ("rows", self.rows.into()),
            ("failed", self.failed.into()),
            ("pearson", self.pearson.into()),
            (
                "max_relative_difference",
                self.max_relative_difference.into(),
            ),
            (
                "median_relative_difference",
                self.median_relative_difference.into(),
            ),
            ("mean_speedup", self.mean_speedup.into()),
            (
                "overestimation_violations",
                self.overestimation_violations.into(),
            ),
        ]
    }
}
