//! Exact between-group set distance.
//!
//! For two groups S0, S1 of points `(x, y)` (insensitive features plus the
//! selected label slot) the distance is
//!
//! ```text
//! D(S0, S1) = max( max_{p in S0} min_{q in S1} d(p, q),
//!                  max_{q in S1} min_{p in S0} d(p, q) )
//! ```
//!
//! with `d` the Euclidean metric on `[y, x_1, .., x_nx]`. Sensitive
//! attributes never enter `d`. Both directed terms are read off a single
//! blocked pass over the `n0 x n1` pair grid, so each pair is evaluated once
//! and only `O(n1)` extra memory per block is used.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupPartition, LabelSource, LabeledDataset};
use crate::error::{Error, Result};

/// Rows of group0 handled per parallel task.
const ROW_BLOCK: usize = 64;

/// A point of the metric space: insensitive features plus a label value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<'a> {
    pub features: &'a [f64],
    pub label: u32,
}

impl<'a> Point<'a> {
    pub fn new(features: &'a [f64], label: u32) -> Self {
        Point { features, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Approx,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
        }
    }
}

/// Repetition count, neighbors scanned per direction, and master seed of the
/// projection approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub m1: usize,
    pub m2: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    pub method: Method,
    pub label_source: LabelSource,
    pub elapsed: Duration,
    /// Present exactly when `method` is [`Method::Approx`].
    pub params: Option<ApproxParams>,
}

/// Squared Euclidean distance on `[label, features..]`. Callers guarantee
/// equal lengths.
#[inline]
pub(crate) fn squared_distance(a: Point<'_>, b: Point<'_>) -> f64 {
    let dy = a.label as f64 - b.label as f64;
    let mut acc = dy * dy;
    for (u, v) in a.features.iter().zip(b.features) {
        let d = u - v;
        acc += d * d;
    }
    acc
}

pub fn point_distance(a: Point<'_>, b: Point<'_>) -> Result<f64> {
    if a.features.len() != b.features.len() {
        return Err(Error::Dimension {
            expected: a.features.len(),
            actual: b.features.len(),
        });
    }
    let d = squared_distance(a, b).sqrt();
    if d.is_nan() {
        return Err(Error::NotANumber("point distance"));
    }
    Ok(d)
}

/// `max_{p in from} min_{q in to} d(p, q)`.
pub fn directed_max_min(from: &[Point<'_>], to: &[Point<'_>]) -> Result<f64> {
    if from.is_empty() {
        return Err(Error::EmptyGroup(0));
    }
    if to.is_empty() {
        return Err(Error::EmptyGroup(1));
    }
    let dim = from[0].features.len();
    if let Some(p) = from.iter().chain(to).find(|p| p.features.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: p.features.len(),
        });
    }
    let mut worst = 0.0f64;
    for &p in from {
        let mut best = f64::INFINITY;
        for &q in to {
            let d = squared_distance(p, q);
            if d.is_nan() {
                return Err(Error::NotANumber("point distance"));
            }
            best = best.min(d);
        }
        worst = worst.max(best);
    }
    Ok(worst.sqrt())
}

/// Collects the points of `indices` with the label slot chosen by `source`.
pub fn points<'a>(
    dataset: &'a LabeledDataset,
    indices: &[usize],
    source: LabelSource,
) -> Result<Vec<Point<'a>>> {
    let labels = dataset.label_slot(source)?;
    Ok(indices
        .iter()
        .map(|&i| Point::new(dataset.feature_row(i), labels[i]))
        .collect())
}

pub fn exact_set_distance(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
) -> Result<DistanceResult> {
    let start = Instant::now();
    let value = exact_value(dataset, partition, source)?;
    Ok(DistanceResult {
        value,
        method: Method::Exact,
        label_source: source,
        elapsed: start.elapsed(),
        params: None,
    })
}

/// The distance value alone, without timing.
pub fn exact_value(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
) -> Result<f64> {
    partition.ensure_nonempty()?;
    let s0 = points(dataset, &partition.group0, source)?;
    let s1 = points(dataset, &partition.group1, source)?;
    let (fwd, bwd) =
        blocked_directed_terms(s0.len(), s1.len(), |i, j| squared_distance(s0[i], s1[j]));
    if fwd.is_nan() || bwd.is_nan() {
        return Err(Error::NotANumber("point distance"));
    }
    Ok(fwd.max(bwd).sqrt())
}

/// Computes both directed max-min terms (squared) over an `n0 x n1` grid of
/// pair costs, evaluating each pair exactly once.
///
/// Row blocks of the grid run in parallel. Each block yields its maximum row
/// minimum and a vector of column minima; blocks are merged with `max` and
/// element-wise `min`, so the result does not depend on scheduling. NaN is
/// propagated to the output.
pub(crate) fn blocked_directed_terms<F>(n0: usize, n1: usize, cost: F) -> (f64, f64)
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let identity = || (0.0f64, vec![f64::INFINITY; n1]);
    let (row_term, col_min) = (0..n0.div_ceil(ROW_BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * ROW_BLOCK;
            let hi = (lo + ROW_BLOCK).min(n0);
            let mut row_term = 0.0f64;
            let mut col_min = vec![f64::INFINITY; n1];
            for i in lo..hi {
                let mut best = f64::INFINITY;
                for (j, cm) in col_min.iter_mut().enumerate() {
                    let d = cost(i, j);
                    best = nan_min(best, d);
                    *cm = nan_min(*cm, d);
                }
                row_term = nan_max(row_term, best);
            }
            (row_term, col_min)
        })
        .reduce(identity, |(ra, mut ca), (rb, cb)| {
            for (x, y) in ca.iter_mut().zip(cb) {
                *x = nan_min(*x, y);
            }
            (nan_max(ra, rb), ca)
        });
    let col_term = col_min.into_iter().fold(0.0f64, nan_max);
    (row_term, col_term)
}

#[inline]
fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

#[inline]
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
