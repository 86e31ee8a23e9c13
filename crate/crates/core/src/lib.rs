//! Regular and alternate softmax policy-gradient estimators.
//!
//! The crate bundles the pieces needed to compare the two estimators end to
//! end: numeric primitives, a log-time softmax sampling tree, bandit theory
//! (expectations, variances, biased fixed points), episodic environments,
//! tile coding, policy parameterizations, training loops, exact tabular
//! oracles, and a seeded sweep runner that writes CSV logs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod analysis;
pub mod bandit;
pub mod environments;
pub mod error;
pub mod experiment;
pub mod features;
pub mod numerics;
pub mod policies;
pub mod sampling_tree;

pub use error::{Error, Result};
