use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::screening::ScreeningResult;
use crate::io::format_number;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Medzisc,
    Naive,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Medzisc => "medzisc",
            Method::Naive => "naive",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "medzisc" => Ok(Method::Medzisc),
            "naive" => Ok(Method::Naive),
            other => Err(format!("unknown method {other}")),
        }
    }
}

/// Mediator pathway: mean expression (`M`) or zero proportion (`F`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pathway {
    M,
    F,
}

impl Pathway {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pathway::M => "M",
            Pathway::F => "F",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneMediationResult {
    pub gene: String,
    pub pathway: Pathway,
    /// Mediator → outcome coefficient (β_M or β_F) with SE and p-value.
    pub outcome_coef: f64,
    pub outcome_se: f64,
    pub outcome_p: f64,
    /// Exposure → mediator coefficient (γ_X or α_X) with SE and p-value.
    pub exposure_coef: f64,
    pub exposure_se: f64,
    pub exposure_p: f64,
    /// Indirect effect at the configured covariate profile.
    pub iie: f64,
    /// Average of per-subject indirect effects.
    pub iie_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iie_note: Option<String>,
    pub p_max: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectEffect {
    pub estimate: f64,
    pub se: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediationReport {
    pub method: Method,
    pub direct_effect: DirectEffect,
    pub m_results: Vec<GeneMediationResult>,
    pub f_results: Vec<GeneMediationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screening: Option<ScreeningResult>,
    /// Genes left out of a family because a fit failed, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub elapsed_seconds: f64,
}

impl MediationReport {
    pub fn discoveries(&self, pathway: Pathway) -> Vec<&str> {
        let rows = match pathway {
            Pathway::M => &self.m_results,
            Pathway::F => &self.f_results,
        };
        rows.iter().filter(|r| r.significant).map(|r| r.gene.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const TSV_HEADER: &'static str = "gene\tpathway\toutcome_coef\toutcome_se\toutcome_p\texposure_coef\texposure_se\texposure_p\tiie\tiie_mean\tp_max\tp_adjusted\tsignificant";

    /// One row per (gene, pathway), M family first.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::TSV_HEADER);
        out.push('\n');
        for r in self.m_results.iter().chain(&self.f_results) {
            let nums = [
                r.outcome_coef,
                r.outcome_se,
                r.outcome_p,
                r.exposure_coef,
                r.exposure_se,
                r.exposure_p,
                r.iie,
                r.iie_mean,
                r.p_max,
                r.p_adjusted,
            ];
            let _ = write!(out, "{}\t{}", r.gene, r.pathway.as_str());
            for v in nums {
                let _ = write!(out, "\t{}", format_number(v));
            }
            let _ = writeln!(out, "\t{}", r.significant);
        }
        out
    }
}
