//! Independent test oracles: nested-loop distances computed straight from
//! the definition, with no code shared with the library's distance paths.

#![allow(dead_code)]

use hfm_core::{GroupPartition, LabelSource, LabeledDataset};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Euclidean distance on `[label, features]`, one square root per pair.
pub fn pair_distance(d: &LabeledDataset, labels: &[u32], i: usize, j: usize) -> f64 {
    let mut comps = vec![labels[i] as f64 - labels[j] as f64];
    comps.extend(
        d.feature_row(i)
            .iter()
            .zip(d.feature_row(j))
            .map(|(a, b)| a - b),
    );
    comps.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn brute_directed(d: &LabeledDataset, labels: &[u32], from: &[usize], to: &[usize]) -> f64 {
    from.iter()
        .map(|&i| {
            to.iter()
                .map(|&j| pair_distance(d, labels, i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

pub fn brute_distance(d: &LabeledDataset, p: &GroupPartition, source: LabelSource) -> f64 {
    let labels = match source {
        LabelSource::TrueLabels => d.labels(),
        LabelSource::Predictions => d.predictions().unwrap(),
    };
    brute_directed(d, labels, &p.group0, &p.group1)
        .max(brute_directed(d, labels, &p.group1, &p.group0))
}

/// Random dataset with one binary attribute and both groups nonempty.
pub fn random_dataset(
    r: &mut impl Rng,
    n: usize,
    n_x: usize,
    n_classes: u32,
    with_predictions: bool,
) -> LabeledDataset {
    assert!(n >= 2);
    let features = (0..n)
        .map(|_| (0..n_x).map(|_| r.gen::<f64>()).collect())
        .collect();
    let mut attrs: Vec<Vec<u32>> = (0..n).map(|_| vec![r.gen_range(0..2)]).collect();
    attrs[0][0] = 0;
    attrs[1][0] = 1;
    let labels = (0..n).map(|_| r.gen_range(1..=n_classes)).collect();
    let preds = with_predictions.then(|| (0..n).map(|_| r.gen_range(1..=n_classes)).collect());
    LabeledDataset::new(features, attrs, labels, preds, n_classes).unwrap()
}
