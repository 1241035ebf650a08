use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::mediation::{MediationReport, Pathway};
use crate::simulation::SimulationTruth;

/// Confusion counts and rates for one mediator family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyScore {
    /// `None` when the family has no true mediators.
    pub power: Option<f64>,
    /// Zero when nothing was discovered.
    pub fdr: f64,
    pub discoveries: usize,
    pub true_positives: usize,
    pub n_true: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateScore {
    pub replicate: u64,
    pub m: FamilyScore,
    pub f: FamilyScore,
    /// Analysis wall-clock time, excluding data generation.
    pub seconds: f64,
}

impl ReplicateScore {
    pub fn power_m(&self) -> Option<f64> {
        self.m.power
    }
    pub fn power_f(&self) -> Option<f64> {
        self.f.power
    }
    pub fn fdr_m(&self) -> f64 {
        self.m.fdr
    }
    pub fn fdr_f(&self) -> f64 {
        self.f.fdr
    }
}

pub fn score_family(discovered: &[&str], truth: &[String]) -> FamilyScore {
    let truth: HashSet<&str> = truth.iter().map(String::as_str).collect();
    let discovered: HashSet<&str> = discovered.iter().copied().collect();
    let tp = discovered.iter().filter(|g| truth.contains(*g)).count();
    FamilyScore {
        power: (!truth.is_empty()).then(|| tp as f64 / truth.len() as f64),
        fdr: if discovered.is_empty() {
            0.0
        } else {
            (discovered.len() - tp) as f64 / discovered.len() as f64
        },
        discoveries: discovered.len(),
        true_positives: tp,
        n_true: truth.len(),
    }
}

/// Power and FDR of each family. The replicate index is left at 0 for the caller to set.
pub fn score_replicate(report: &MediationReport, truth: &SimulationTruth) -> ReplicateScore {
    ReplicateScore {
        replicate: 0,
        m: score_family(&report.discoveries(Pathway::M), &truth.m_family()),
        f: score_family(&report.discoveries(Pathway::F), &truth.f_family()),
        seconds: report.elapsed_seconds,
    }
}
