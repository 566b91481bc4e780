//! Local covariate selection for average causal effect estimation when
//! covariates may be affected by the treatment and latent confounders may be
//! present.
//!
//! The pipeline learns the partial ancestral graph around a treatment from
//! conditional-independence answers, then applies three local identification
//! rules: two that return a valid adjustment set and one that certifies a zero
//! effect. When none applies the effect is reported as not identifiable.

pub mod adjustment;
pub mod error;
pub mod estimate;
pub mod graph;
pub mod independence;
pub mod local;
pub mod orient;
pub mod projection;
pub mod simbench;

pub use error::{LcsError, Result};
pub use graph::{Edge, GraphKind, Mark, MixedGraph, NodeSet, PathKind};
