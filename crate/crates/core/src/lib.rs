//! Between-group set distances and the fairness measure built on them.
//!
//! The distance between the unprivileged and privileged groups of a dataset
//! is the symmetric max-min (Hausdorff-style) distance over points
//! `(insensitive features, label)`. Computing it once with the true labels
//! and once with a classifier's predictions gives `D` and `D_f`; the ratio
//! `D_f / D - 1` measures how much bias the classifier adds on top of the
//! data.
//!
//! - [`exact`]: the `O(n0 * n1)` reference computation.
//! - [`approx`]: random 1-D projections with a bounded sorted scan,
//!   `O(m1 * n * (log n + m2))`, always an upper bound on the exact value.
//! - [`fairness`]: the manifold measure and the group-rate baselines.
//! - [`theory`]: projection-order probabilities, success-probability bounds and the
//!   `(m1, m2)` tuner.
//! - [`bench`]: synthetic data and exact-versus-approximate sweeps.
//! - [`io`], [`report`]: CSV loading with min-max scaling; JSON/CSV reports.

pub mod approx;
pub mod bench;
pub mod dataset;
pub mod error;
pub mod exact;
pub mod fairness;
pub mod io;
pub mod report;
pub mod seed;
pub mod theory;

pub use approx::{
    accele_dist, approx_dist, default_m2, project, sample_l1_unit_vector, ProjectionVector,
};
pub use dataset::{
    flip_binary_attribute, joint_partition, partition_by_attribute, GroupPartition, LabelSource,
    LabeledDataset,
};
pub use error::{Error, Result};
pub use exact::{exact_set_distance, point_distance, ApproxParams, DistanceResult, Method, Point};
pub use fairness::{hfm, hfm_approx, hfm_exact, FairnessValue};
