//! Random-projection approximation of the between-group set distance.
//!
//! One repetition ([`accele_dist`]) projects every point `[y, x]` onto a
//! random direction `w` with `sum |w_i| = 1`, sorts the projections, and for
//! each anchor point compares it with at most `m2` opposite-group points on
//! each side in sorted order. The repetition returns the largest of the
//! per-anchor minima. [`approx_dist`] takes the minimum over `m1`
//! repetitions.
//!
//! Each per-anchor minimum runs over a subset of the opposite group, so it
//! can only overshoot the true nearest-neighbor distance; every repetition,
//! and therefore their minimum, is an upper bound on the exact value.

use std::time::Instant;

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupPartition, LabelSource, LabeledDataset};
use crate::error::{Error, Result};
use crate::exact::{ApproxParams, DistanceResult, Method};
use crate::seed;

pub const DEFAULT_M1: usize = 25;
pub const DEFAULT_SEED: u64 = 42;

/// Tolerance on `sum |w_i| = 1`.
pub const L1_TOLERANCE: f64 = 1e-12;

/// A direction on the L1 unit sphere in `1 + n_x` dimensions. `weights[0]`
/// multiplies the label, the rest multiply features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionVector {
    weights: Vec<f64>,
}

impl ProjectionVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("projection vector is empty".into()));
        }
        if weights.iter().any(|w| w.is_nan()) {
            return Err(Error::NotANumber("projection vector"));
        }
        let l1: f64 = weights.iter().map(|w| w.abs()).sum();
        if (l1 - 1.0).abs() > L1_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "projection vector has L1 norm {l1}, expected 1"
            )));
        }
        Ok(ProjectionVector { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Draws a direction uniformly from the L1 unit sphere: i.i.d. standard
/// Laplace coordinates divided by their L1 norm.
pub fn sample_l1_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<ProjectionVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "projection dimension must be positive".into(),
        ));
    }
    loop {
        let raw: Vec<f64> = (0..dim)
            .map(|_| {
                let magnitude: f64 = rng.sample(Exp1);
                if rng.gen::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        let l1: f64 = raw.iter().map(|w| w.abs()).sum();
        if l1 > 0.0 {
            let weights = raw.into_iter().map(|w| w / l1).collect();
            return Ok(ProjectionVector { weights });
        }
    }
}

/// `[label, features] . w`.
pub fn project(features: &[f64], label: u32, w: &ProjectionVector) -> Result<f64> {
    if w.dim() != features.len() + 1 {
        return Err(Error::Dimension {
            expected: w.dim(),
            actual: features.len() + 1,
        });
    }
    Ok(project_unchecked(features, label, &w.weights))
}

#[inline]
fn project_unchecked(features: &[f64], label: u32, w: &[f64]) -> f64 {
    let mut acc = w[0] * label as f64;
    for (x, wi) in features.iter().zip(&w[1..]) {
        acc += x * wi;
    }
    acc
}

/// `ceil(2 * log10(n))`, at least 1. Computed in integers as the smallest
/// `m` with `n^2 <= 10^m`.
pub fn default_m2(n: usize) -> usize {
    let n_sq = (n as u128) * (n as u128);
    let mut m = 0usize;
    let mut pow: u128 = 1;
    while pow < n_sq {
        match pow.checked_mul(10) {
            Some(p) => {
                pow = p;
                m += 1;
            }
            None => return m + 1,
        }
    }
    m.max(1)
}

impl ApproxParams {
    /// Default repetition count and seed with `m2 = default_m2(n)`.
    pub fn defaults_for(n: usize) -> Self {
        ApproxParams {
            m1: DEFAULT_M1,
            m2: default_m2(n),
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "m1 and m2 must be positive (got m1={}, m2={})",
                self.m1, self.m2
            )));
        }
        Ok(())
    }
}

/// Value of one projection repetition plus the number of point-distance
/// evaluations it performed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceleOutcome {
    pub value: f64,
    pub evaluations: usize,
}

/// The projection-independent part of a repetition: the union of both
/// groups laid out as `[label, features..]` rows, with group membership.
struct ScanInput {
    width: usize,
    rows: Vec<f64>,
    in_group1: Vec<bool>,
}

impl ScanInput {
    fn build(
        dataset: &LabeledDataset,
        partition: &GroupPartition,
        source: LabelSource,
    ) -> Result<Self> {
        partition.ensure_nonempty()?;
        let labels = dataset.label_slot(source)?;
        let mut members: Vec<(usize, bool)> = partition
            .group0
            .iter()
            .map(|&i| (i, false))
            .chain(partition.group1.iter().map(|&i| (i, true)))
            .collect();
        members.sort_unstable_by_key(|&(i, _)| i);
        let width = dataset.n_features() + 1;
        let mut rows = Vec::with_capacity(members.len() * width);
        for &(i, _) in &members {
            rows.push(labels[i] as f64);
            rows.extend_from_slice(dataset.feature_row(i));
        }
        if rows.iter().any(|v| v.is_nan()) {
            return Err(Error::NotANumber("features"));
        }
        Ok(ScanInput {
            width,
            rows,
            in_group1: members.into_iter().map(|(_, g)| g).collect(),
        })
    }

    fn len(&self) -> usize {
        self.in_group1.len()
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.width..(k + 1) * self.width]
    }

    fn run(&self, w: &ProjectionVector, m2: usize) -> Result<AcceleOutcome> {
        if w.dim() != self.width {
            return Err(Error::Dimension {
                expected: self.width,
                actual: w.dim(),
            });
        }
        if m2 == 0 {
            return Err(Error::InvalidArgument("m2 must be positive".into()));
        }
        let n = self.len();
        let weights = w.weights();
        let keys: Vec<f64> = (0..n)
            .map(|k| self.row(k).iter().zip(weights).map(|(x, wi)| x * wi).sum())
            .collect();
        if keys.iter().any(|k| k.is_nan()) {
            return Err(Error::NotANumber("projection"));
        }

        // Ascending by projected value, ties by row order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));

        // Sorted positions of each group, and for every sorted position the
        // number of group0 / group1 members strictly before it.
        let mut positions: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut before: Vec<[usize; 2]> = Vec::with_capacity(n);
        for (pos, &k) in order.iter().enumerate() {
            before.push([positions[0].len(), positions[1].len()]);
            positions[self.in_group1[k] as usize].push(pos);
        }
        let width = self.width;
        let mut sorted = Vec::with_capacity(n * width);
        for &k in &order {
            sorted.extend_from_slice(self.row(k));
        }
        let at = |pos: usize| &sorted[pos * width..(pos + 1) * width];

        let (worst, evaluations) = (0..n)
            .into_par_iter()
            .map(|pos| {
                let anchor = at(pos);
                let own = self.in_group1[order[pos]] as usize;
                let opposite = &positions[1 - own];
                let c = before[pos][1 - own];
                let left = &opposite[c.saturating_sub(m2)..c];
                let right = &opposite[c..(c + m2).min(opposite.len())];
                let mut best = f64::INFINITY;
                for &q in left.iter().chain(right) {
                    best = best.min(squared(anchor, at(q)));
                }
                (best, left.len() + right.len())
            })
            .reduce(|| (0.0f64, 0usize), |(a, ea), (b, eb)| (a.max(b), ea + eb));

        Ok(AcceleOutcome {
            value: worst.sqrt(),
            evaluations,
        })
    }
}

/// Same operation order as the exact oracle so recovered values agree
/// bit for bit.
#[inline]
fn squared(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (u, v) in a.iter().zip(b) {
        let d = u - v;
        acc += d * d;
    }
    acc
}

/// One projection repetition with a fixed direction `w`.
pub fn accele_dist(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
    w: &ProjectionVector,
    m2: usize,
) -> Result<f64> {
    accele_dist_detailed(dataset, partition, source, w, m2).map(|o| o.value)
}

pub fn accele_dist_detailed(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
    w: &ProjectionVector,
    m2: usize,
) -> Result<AcceleOutcome> {
    ScanInput::build(dataset, partition, source)?.run(w, m2)
}

/// Minimum of `params.m1` repetitions. Repetition `j` samples its direction
/// from `seed::child_seed(params.seed, j)`, so results are reproducible and
/// a run with more repetitions extends the same sequence of directions.
pub fn approx_dist(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
    params: ApproxParams,
) -> Result<DistanceResult> {
    let start = Instant::now();
    let value = approx_value(dataset, partition, source, params)?;
    Ok(DistanceResult {
        value,
        method: Method::Approx,
        label_source: source,
        elapsed: start.elapsed(),
        params: Some(params),
    })
}

/// The approximated distance value alone, without timing.
pub fn approx_value(
    dataset: &LabeledDataset,
    partition: &GroupPartition,
    source: LabelSource,
    params: ApproxParams,
) -> Result<f64> {
    params.validate()?;
    let input = ScanInput::build(dataset, partition, source)?;
    let per_rep: Vec<f64> = (0..params.m1)
        .into_par_iter()
        .map(|j| {
            let mut rng = seed::rng_for(seed::child_seed(params.seed, j as u64));
            let w = sample_l1_unit_vector(input.width, &mut rng)?;
            input.run(&w, params.m2).map(|o| o.value)
        })
        .collect::<Result<_>>()?;
    Ok(per_rep.into_iter().fold(f64::INFINITY, f64::min))
}
