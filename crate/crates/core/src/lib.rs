//! Randomised exploration for single-parameter bandits by minimising
//! linearly perturbed regularised likelihoods, with perturbed-history,
//! Laplace-Thompson and greedy baselines, warm-up designs and regret
//! accounting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod diagnostics;
pub mod env;
pub mod error;
pub mod experiment;
pub mod family;
pub mod history;
pub mod loss;
pub mod policy;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use family::{FamilyKind, RewardFamily};
pub use history::History;
pub use loss::{fit, FitOptions, FitResult};
