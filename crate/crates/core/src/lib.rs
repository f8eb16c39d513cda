//! Nested logit discrete choice on arbitrary nest trees.
//!
//! The analytic side ([`nested_logit`]) computes choice probabilities, the
//! Emax (inclusive value) and the joint CDF of the error vector by backward
//! and forward passes over an [`arborescence::Arborescence`]. The stochastic
//! side ([`representation`]) draws the same error vector exactly, by stacking
//! positive stable factors along root paths, so every closed form can be
//! checked against simulation.

pub mod arborescence;
pub mod copula;
pub mod distributions;
mod error;
pub mod format;
pub mod generate;
pub mod model_file;
pub mod nested_logit;
mod parallel;
pub mod representation;
pub mod rng;
pub mod special;
pub mod stats;
pub mod verify;

pub use arborescence::{Arborescence, NodeId, NodeKind, TreeMetrics};
pub use error::{Error, Result};
pub use nested_logit::{ModelSpec, NodeValues};
pub use representation::{EstimateWithError, SampleBatch};
pub use rng::SeededStream;
