//! Synthetic single-cell datasets with known mediators.
//!
//! Subjects get a binary exposure and standard-normal covariates; each gene's
//! cell counts follow a ZINB whose zero-inflation probability and mean depend
//! on exposure and covariates through logit and log links. A subset of genes
//! is designated as true mediators (both pathways, M only, or F only) and the
//! outcome is linear in exposure, covariates and the aggregated features.

mod config;
mod generate;
pub mod rng;
mod zinb;

pub use config::{CoefficientMode, CoefficientRanges, FixedEffects, Range, ScenarioConfig, Split};
pub use generate::{
    generate_replicate, simulate_outcome, zinb_parameters, MediatorType, SimulatedDataset,
    SimulationTruth,
};
pub use zinb::sample_zinb;
