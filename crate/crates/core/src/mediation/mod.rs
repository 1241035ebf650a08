//! Screening, model fitting and pathway testing for co-mediators.

mod config;
mod iie;
mod naive;
mod pipeline;
mod report;
mod screening;
mod testing;

pub use config::{MediationConfig, NaiveOutcome, ScreeningRule};
pub use iie::{estimate_iie_f, estimate_iie_m};
pub use naive::run_naive;
pub use pipeline::{fit_final_models, run_medzisc, FinalModels};
pub use report::{DirectEffect, GeneMediationResult, MediationReport, Method, Pathway};
pub use screening::{screen_mediators, CandidateGene, GeneMarginals, ScreeningResult};
pub use testing::{bh_adjust, js_test};

/// Outcome-model column name of a gene's mean-expression term.
pub fn m_term(gene: &str) -> String {
    format!("M:{gene}")
}

/// Outcome-model column name of a gene's zero-proportion term.
pub fn f_term(gene: &str) -> String {
    format!("F:{gene}")
}

pub const EXPOSURE: &str = "X";
