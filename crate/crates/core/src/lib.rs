//! Graph layouts whose node distances from the origin are fixed by a
//! centrality measure: central nodes near the middle, peripheral nodes out.
//!
//! Two solvers are provided. [`mds::solve_ccmds`] runs a stress-based
//! (MDS) layout with each node kept inside its ball. [`lle::solve_cclle`]
//! runs a locally linear embedding with each node kept on its sphere.

// Negated comparisons are how NaN parameters get rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod centrality;
pub mod dissimilarity;
pub mod embedding;
pub mod error;
pub mod generate;
pub mod graph;
pub mod lle;
pub mod mds;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use error::{Error, ErrorClass, Result};
