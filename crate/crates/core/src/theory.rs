//! Closed-form guarantees of the projection approximation and Monte Carlo
//! checks for them.
//!
//! For two vectors `v1`, `v2` with `|v1| <= |v2|` and a uniformly random unit
//! direction `w`, the event `|<w, v1>| >= |<w, v2>|` is equivalent to
//! `<v2 - v1, w> <v1 + v2, w> <= 0`, which holds on a double wedge of angle
//! `theta` between the hyperplanes normal to `v2 - v1` and `v1 + v2`. Hence
//! the probability is `theta / pi`, sandwiched by
//!
//! ```text
//! sin(phi)/pi * r1/r2  <=  theta/pi  <=  (1 + r1^2/r2^2)^(-1/2) * r1/r2
//! ```
//!
//! where `phi` is the angle between `v1` and `v2`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::dataset::{LabelSource, LabeledDataset};
use crate::error::{Error, Result};
use crate::exact::{points, squared_distance};
use crate::seed;

/// Slack on `r1 <= r2` so that equal-length vectors built by rotation are
/// not rejected over a rounding error.
const LENGTH_SLACK: f64 = 1e-12;

const MC_CHUNK: usize = 4096;

/// Largest `m2` [`suggest_m2`] will return; beyond 2^53 consecutive
/// integers stop being distinguishable in `f64`.
const MAX_SUGGESTED_M2: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBound {
    pub lower: f64,
    pub upper: f64,
    pub exact: f64,
    pub phi: f64,
    pub r1: f64,
    pub r2: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|v1 ^ v2|^2 = sum_{i<j} (v1_i v2_j - v1_j v2_i)^2`, i.e.
/// `r1^2 r2^2 - <v1, v2>^2` without cancellation.
fn wedge_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let m = a[i] * b[j] - a[j] * b[i];
            acc += m * m;
        }
    }
    acc
}

fn check_pair(v1: &[f64], v2: &[f64]) -> Result<(f64, f64)> {
    if v1.len() != v2.len() {
        return Err(Error::Dimension {
            expected: v1.len(),
            actual: v2.len(),
        });
    }
    if v1.iter().chain(v2).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("vectors must be finite".into()));
    }
    let r1 = dot(v1, v1).sqrt();
    let r2 = dot(v2, v2).sqrt();
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::InvalidArgument("zero vector".into()));
    }
    Ok((r1, r2))
}

/// The sandwich bounds and the exact probability `theta / pi`.
///
/// `theta` is the acute angle between `v2 - v1` and `v1 + v2`; since
/// `|(v2 - v1) ^ (v1 + v2)| = 2 |v1 ^ v2|` and
/// `<v2 - v1, v1 + v2> = r2^2 - r1^2`, it is evaluated as
/// `atan2(2 |v1 ^ v2|, r2^2 - r1^2)`, which agrees with the closed form
/// `sin^2 theta = (4 r1^2 r2^2 - 4 <v1,v2>^2) / ((r1^2 + r2^2)^2 - 4 <v1,v2>^2)`.
///
/// When `v1 = +-v2` the event holds surely and `exact` is 1; the sandwich
/// does not apply to that degenerate pair.
pub fn projection_order_bounds(v1: &[f64], v2: &[f64]) -> Result<ProjectionBound> {
    let (r1, r2) = check_pair(v1, v2)?;
    if v1.len() < 2 {
        return Err(Error::InvalidArgument(
            "dimension must be at least 2".into(),
        ));
    }
    if r1 > r2 * (1.0 + LENGTH_SLACK) {
        return Err(Error::InvalidArgument(format!(
            "expected |v1| <= |v2|, got {r1} > {r2}"
        )));
    }
    let wedge = wedge_sq(v1, v2).sqrt();
    let phi = wedge.atan2(dot(v1, v2));
    let sin_phi = wedge / (r1 * r2);
    let ratio = r1 / r2;
    let lower = sin_phi / PI * ratio;
    let upper = ratio / (1.0 + ratio * ratio).sqrt();
    let along = dot(v2, v2) - dot(v1, v1);
    let exact = if wedge == 0.0 && along == 0.0 {
        1.0
    } else {
        (2.0 * wedge).atan2(along) / PI
    };
    Ok(ProjectionBound {
        lower,
        upper,
        exact,
        phi,
        r1,
        r2,
    })
}

/// `sin^2 theta` straight from the closed form in terms of lengths and the
/// inner product.
pub fn sin_sq_theta(v1: &[f64], v2: &[f64]) -> Result<f64> {
    check_pair(v1, v2)?;
    let r1s = dot(v1, v1);
    let r2s = dot(v2, v2);
    let ip = dot(v1, v2);
    let s = r1s + r2s;
    Ok((4.0 * r1s * r2s - 4.0 * ip * ip) / (s * s - 4.0 * ip * ip))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Empirical frequency of `|<w, v1>| >= |<w, v2>|` over `trials` Gaussian
/// directions, with its binomial standard error. Trials are split into
/// fixed-size chunks seeded by `seed::child_seed(seed, chunk)`.
pub fn monte_carlo_projection_probability(
    v1: &[f64],
    v2: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_pair(v1, v2)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let dim = v1.len();
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng_for(seed::child_seed(seed, c as u64));
            let count = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut w = vec![0.0f64; dim];
            let mut hits = 0usize;
            for _ in 0..count {
                for wi in w.iter_mut() {
                    *wi = rng.sample(StandardNormal);
                }
                if dot(&w, v1).abs() >= dot(&w, v2).abs() {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(MonteCarloEstimate {
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
    })
}

/// Volume of the unit ball in `dim` dimensions.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBound {
    pub n: usize,
    pub k: usize,
    pub mu: f64,
    pub alpha: f64,
    pub m1: usize,
    pub m2: usize,
    /// Clamped to `[0, 1]`.
    pub prob_linear: f64,
    /// Clamped to `[0, 1]`.
    pub prob_lifted: f64,
    pub prob_linear_raw: f64,
    pub prob_lifted_raw: f64,
    pub lambda: f64,
}

/// Lower bounds on the probability that the approximation lands within a
/// factor `alpha` of the exact distance, for `n` points in `k + 1`
/// dimensions with scaled density `mu`:
///
/// ```text
/// linear:   1 - (pi mu / (m2 V) * ((1 + n/mu)^(1/(k+1)) - alpha))^m1
/// lifted:   1 - (pi mu / (m2 V) * (((1 + n/mu)^(2/(k+1)) + 1)^(1/2) - (alpha^2 + 1)^(1/2)))^m1
/// ```
///
/// with `V` the unit-ball volume in `k + 1` dimensions. A negative bracket
/// is clamped to 0 (the bound becomes 1).
pub fn success_bound(
    n: usize,
    k: usize,
    mu: f64,
    alpha: f64,
    m1: usize,
    m2: usize,
) -> Result<SuccessBound> {
    if n == 0 || k == 0 || m1 == 0 || m2 == 0 {
        return Err(Error::InvalidArgument(
            "n, k, m1, m2 must be positive".into(),
        ));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "mu must be positive, got {mu}"
        )));
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    let dim = (k + 1) as f64;
    let scale = PI * mu / (m2 as f64 * unit_ball_volume(k + 1));
    let growth = 1.0 + n as f64 / mu;
    let bracket_linear = (growth.powf(1.0 / dim) - alpha).max(0.0);
    let bracket_lifted =
        ((growth.powf(2.0 / dim) + 1.0).sqrt() - (alpha * alpha + 1.0).sqrt()).max(0.0);
    let raw = |bracket: f64| 1.0 - (scale * bracket).powf(m1 as f64);
    let prob_linear_raw = raw(bracket_linear);
    let prob_lifted_raw = raw(bracket_lifted);
    Ok(SuccessBound {
        n,
        k,
        mu,
        alpha,
        m1,
        m2,
        prob_linear: prob_linear_raw.clamp(0.0, 1.0),
        prob_lifted: prob_lifted_raw.clamp(0.0, 1.0),
        prob_linear_raw,
        prob_lifted_raw,
        lambda: magnitude_lambda(n, k, m1, m2),
    })
}

/// `lambda = -m1 (log10(n)/(k+1) - log10(m2))`; the failure probability
/// scales like `10^-lambda`.
pub fn magnitude_lambda(n: usize, k: usize, m1: usize, m2: usize) -> f64 {
    -(m1 as f64) * ((n as f64).log10() / (k + 1) as f64 - (m2 as f64).log10())
}

/// Smallest `m2` whose [`magnitude_lambda`] reaches `target_lambda`.
pub fn suggest_m2(n: usize, k: usize, m1: usize, target_lambda: f64) -> Result<usize> {
    if n == 0 || m1 == 0 {
        return Err(Error::InvalidArgument("n and m1 must be positive".into()));
    }
    if !(target_lambda >= 0.0 && target_lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target lambda must be a nonnegative number, got {target_lambda}"
        )));
    }
    let guess = 10f64.powf(target_lambda / m1 as f64 + (n as f64).log10() / (k + 1) as f64);
    if guess.is_nan() || guess > MAX_SUGGESTED_M2 {
        return Err(Error::InvalidArgument(format!(
            "target lambda {target_lambda} needs m2 of about {guess:.3e}, beyond {MAX_SUGGESTED_M2:e}"
        )));
    }
    let mut m2 = (guess.ceil() as usize).max(1);
    while m2 > 1 && magnitude_lambda(n, k, m1, m2 - 1) >= target_lambda {
        m2 -= 1;
    }
    while magnitude_lambda(n, k, m1, m2) < target_lambda {
        m2 += 1;
    }
    Ok(m2)
}

/// Empirical scaled density of a dataset at distance `d`.
///
/// The infimum over all balls of radius `r` is approximated by balls centred
/// on data points; for each radius in `radii` the sparsest such ball gives
/// `count * (d / r)^dim`, and the estimate is the largest value over the
/// grid. `dim` is `n_features + 1`.
pub fn estimate_scaled_density(
    dataset: &LabeledDataset,
    source: LabelSource,
    d: f64,
    radii: &[f64],
) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {d}"
        )));
    }
    if radii.is_empty() || radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
        return Err(Error::InvalidArgument(
            "radius grid must be nonempty and positive".into(),
        ));
    }
    let all: Vec<usize> = (0..dataset.len()).collect();
    let pts = points(dataset, &all, source)?;
    let dim = (dataset.n_features() + 1) as i32;
    let best = radii
        .par_iter()
        .map(|&r| {
            let r_sq = r * r;
            let sparsest = pts
                .iter()
                .map(|&c| {
                    pts.iter()
                        .filter(|&&q| squared_distance(c, q) <= r_sq)
                        .count()
                })
                .min()
                .unwrap_or(0);
            sparsest as f64 * (d / r).powi(dim)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Geometric radius grid of `steps` values from `d` to `max_radius`.
pub fn geometric_radius_grid(d: f64, max_radius: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 || max_radius <= d {
        return vec![d];
    }
    let ratio = (max_radius / d).powf(1.0 / (steps - 1) as f64);
    (0..steps).map(|i| d * ratio.powi(i as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_lengths_give_one_half() {
        let b = projection_order_bounds(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((b.exact - 0.5).abs() < 1e-15);
        let b = projection_order_bounds(&[0.6, 0.8, 0.0], &[0.0, 0.6, 0.8]).unwrap();
        assert!((b.exact - 0.5).abs() < 1e-12);
    }

    #[test]
    fn derived_example() {
        let b = projection_order_bounds(&[1.0, 0.0], &[0.0, 2.0]).unwrap();
        assert!((sin_sq_theta(&[1.0, 0.0], &[0.0, 2.0]).unwrap() - 16.0 / 25.0).abs() < 1e-15);
        assert!((b.exact - (0.8f64).asin() / PI).abs() < 1e-15);
        assert!((b.exact - 0.2952).abs() < 1e-4);
        assert!(b.lower <= b.exact && b.exact <= b.upper);
    }

    #[test]
    fn small_ratio_limits() {
        let b = projection_order_bounds(&[1e-9, 0.0], &[0.0, 1.0]).unwrap();
        assert!(b.lower < 1e-8 && b.upper < 1e-8);
    }

    #[test]
    fn degenerate_pairs() {
        assert!(projection_order_bounds(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(projection_order_bounds(&[2.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(projection_order_bounds(&[1.0], &[2.0]).is_err());
        assert_eq!(
            projection_order_bounds(&[1.0, 1.0], &[1.0, 1.0])
                .unwrap()
                .exact,
            1.0
        );
        assert_eq!(
            projection_order_bounds(&[1.0, 1.0], &[2.0, 2.0])
                .unwrap()
                .exact,
            0.0
        );
    }

    #[test]
    fn monte_carlo_identical_vectors() {
        let e = monte_carlo_projection_probability(&[0.3, 0.4], &[0.3, 0.4], 1000, 1).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert!(monte_carlo_projection_probability(&[0.3, 0.4], &[0.3, 0.4], 0, 1).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_examples() {
        assert!(magnitude_lambda(10_000, 3, 25, 10).abs() < 1e-12);
        assert!((magnitude_lambda(10_000, 3, 25, 20) - 25.0 * 2f64.log10()).abs() < 1e-12);
        assert!((magnitude_lambda(10_000, 3, 25, 20) - 7.526).abs() < 1e-3);
        let l = magnitude_lambda(5000, 4, 10, 7);
        assert!((magnitude_lambda(5000, 4, 20, 7) - 2.0 * l).abs() < 1e-12);
    }

    #[test]
    fn suggest_m2_examples() {
        assert_eq!(suggest_m2(10_000, 3, 25, 7.5).unwrap(), 20);
        assert_eq!(suggest_m2(10_000, 3, 25, 0.0).unwrap(), 10);
        assert_eq!(suggest_m2(1000, 2, 25, 0.0).unwrap(), 10);
        assert_eq!(
            suggest_m2(2000, 2, 25, 0.0).unwrap(),
            (2000f64).powf(1.0 / 3.0).ceil() as usize
        );
        assert!(suggest_m2(10, 1, 5, -1.0).is_err());
    }

    #[test]
    fn bound_clamps() {
        // alpha above the growth term: bracket clamps to 0, bound is 1.
        let b = success_bound(100, 2, 1.0, 10.0, 5, 3).unwrap();
        assert_eq!(b.prob_linear, 1.0);
        assert_eq!(b.prob_lifted, 1.0);
        // m2 = 1 with a large n gives a base above 1: raw value negative, clamped to 0.
        let b = success_bound(1_000_000, 1, 1.0, 1.0, 3, 1).unwrap();
        assert!(b.prob_linear_raw < 0.0);
        assert_eq!(b.prob_linear, 0.0);
        assert!(success_bound(0, 2, 1.0, 1.0, 1, 1).is_err());
        assert!(success_bound(10, 2, 0.0, 1.0, 1, 1).is_err());
        assert!(success_bound(10, 2, 1.0, 0.5, 1, 1).is_err());
    }

    #[test]
    fn radius_grid() {
        let g = geometric_radius_grid(0.1, 1.6, 5);
        assert_eq!(g.len(), 5);
        assert!((g[4] - 1.6).abs() < 1e-12);
        assert!((g[1] - 0.2).abs() < 1e-12);
    }
}
