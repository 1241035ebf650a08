//! Causal mediation analysis for zero-inflated single-cell count data.
//!
//! Cell-level counts are aggregated per subject into two co-mediators per gene
//! (mean expression `M` and zero proportion `F`). Candidate genes are screened
//! with a Lasso outcome model plus marginal negative-binomial and beta
//! regressions, interventional indirect effects are estimated in closed form,
//! and pathways are tested with the joint-significance (max-p) test followed by
//! Benjamini–Hochberg adjustment.

pub mod data;
pub mod error;
pub mod glm;
pub mod io;
pub mod mediation;
pub mod simulation;
pub mod evaluation;

pub use error::{Error, Result};
