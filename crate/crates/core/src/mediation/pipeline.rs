use std::time::Instant;

use super::iie::{estimate_iie_f, estimate_iie_m};
use super::report::{DirectEffect, GeneMediationResult, MediationReport, Method, Pathway};
use super::screening::{base_columns, screen_mediators, GeneMarginals, ScreeningResult};
use super::testing::{bh_adjust, js_test};
use super::{f_term, m_term, MediationConfig, EXPOSURE};
use crate::data::PseudobulkDataset;
use crate::error::{Error, Result};
use crate::glm::{fit_ols, DesignMatrix, RegressionFit, INTERCEPT};

/// Outcome model over the screened terms plus the reused marginal fits.
#[derive(Debug, Clone)]
pub struct FinalModels {
    pub outcome: RegressionFit,
    /// Screened terms removed because they were collinear with earlier columns.
    pub dropped_terms: Vec<String>,
}

/// Linear outcome model `Y ~ X + Z + selected M terms + selected F terms`.
pub fn fit_final_models(dataset: &PseudobulkDataset, screening: &ScreeningResult) -> Result<FinalModels> {
    let y = dataset.subjects.outcomes()?;
    let (mut names, mut cols) = base_columns(dataset);
    let n_base = names.len();
    for c in &screening.candidates {
        let j = dataset
            .gene_index(&c.gene)
            .ok_or_else(|| Error::Structural(format!("screened gene {} not in dataset", c.gene)))?;
        if c.include_m {
            names.push(m_term(&c.gene));
            cols.push(dataset.m_column(j));
        }
        if c.include_f && dataset.f_modeled[j] {
            names.push(f_term(&c.gene));
            cols.push(dataset.f_column(j));
        }
    }
    let full = DesignMatrix::with_intercept(names, &cols)?;
    let dependent = full.dependent_columns();
    if let Some(&j) = dependent.iter().find(|&&j| j <= n_base) {
        return Err(Error::SingularDesign {
            columns: vec![full.names()[j].clone()],
        });
    }
    let dropped_terms: Vec<String> = dependent.iter().map(|&j| full.names()[j].clone()).collect();
    for t in &dropped_terms {
        log::warn!("outcome model: term {t} is collinear with earlier columns and was dropped");
    }
    let keep: Vec<usize> = (0..full.ncols()).filter(|j| !dependent.contains(j)).collect();
    let outcome = fit_ols(&y, &full.select(&keep))?;
    Ok(FinalModels { outcome, dropped_terms })
}

/// Everything needed to score one (gene, pathway) pair before BH adjustment.
pub(crate) struct PathwayInputs<'a> {
    pub gene: usize,
    pub pathway: Pathway,
    pub outcome: &'a RegressionFit,
    pub mediator: &'a RegressionFit,
}

/// Resolve the covariate profile, defaulting to the sample mean.
pub(crate) fn covariate_profile(dataset: &PseudobulkDataset, config: &MediationConfig) -> Result<Vec<f64>> {
    let k = dataset.subjects.n_covariates();
    match &config.covariate_profile {
        Some(p) if p.len() != k => Err(Error::config(
            "covariate_profile",
            format!("has {} entries, dataset has {k} covariates", p.len()),
        )),
        Some(p) => Ok(p.clone()),
        None => Ok(dataset.subjects.covariate_means()),
    }
}

/// Covariate effects of a mediator model with the intercept prepended.
fn covariate_effects(fit: &RegressionFit, dataset: &PseudobulkDataset) -> Vec<f64> {
    let mut v = vec![fit.coefficient(INTERCEPT).unwrap_or(0.0)];
    v.extend(
        dataset
            .subjects
            .covariate_names()
            .iter()
            .map(|n| fit.coefficient(n).unwrap_or(0.0)),
    );
    v
}

fn with_intercept(z: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(z.len() + 1);
    v.push(1.0);
    v.extend_from_slice(z);
    v
}

pub(crate) fn pathway_result(
    input: &PathwayInputs<'_>,
    dataset: &PseudobulkDataset,
    profile: &[f64],
    config: &MediationConfig,
) -> Option<GeneMediationResult> {
    let gene = &dataset.gene_names[input.gene];
    let term = match input.pathway {
        Pathway::M => m_term(gene),
        Pathway::F => f_term(gene),
    };
    let idx = input.outcome.index(&term)?;
    let x_idx = input.mediator.index(EXPOSURE)?;
    let (b, b_se, b_p) = (
        input.outcome.coefficients[idx],
        input.outcome.standard_errors[idx],
        input.outcome.p_values[idx],
    );
    let (a, a_se, a_p) = (
        input.mediator.coefficients[x_idx],
        input.mediator.standard_errors[x_idx],
        input.mediator.p_values[x_idx],
    );
    if !b_p.is_finite() || !a_p.is_finite() {
        return None;
    }
    let effects = covariate_effects(input.mediator, dataset);
    let (x1, x2) = config.contrast;
    let iie_at = |z: &[f64]| match input.pathway {
        Pathway::M => estimate_iie_m(b, a, &effects, &with_intercept(z), x1, x2),
        Pathway::F => estimate_iie_f(b, a, &effects, &with_intercept(z), x1, x2),
    };
    let mut note = None;
    let iie = iie_at(profile).unwrap_or_else(|e| {
        note = Some(e.to_string());
        f64::NAN
    });
    let per_subject: Result<Vec<f64>> = dataset.subjects.subjects().iter().map(|s| iie_at(&s.covariates)).collect();
    let iie_mean = match per_subject {
        Ok(v) => v.iter().sum::<f64>() / v.len().max(1) as f64,
        Err(e) => {
            note.get_or_insert_with(|| e.to_string());
            f64::NAN
        }
    };
    Some(GeneMediationResult {
        gene: gene.clone(),
        pathway: input.pathway,
        outcome_coef: b,
        outcome_se: b_se,
        outcome_p: b_p,
        exposure_coef: a,
        exposure_se: a_se,
        exposure_p: a_p,
        iie,
        iie_mean,
        iie_note: note,
        p_max: js_test(b_p, a_p),
        p_adjusted: f64::NAN,
        significant: false,
    })
}

/// BH within one family, then flag significance.
pub(crate) fn adjust_family(rows: &mut [GeneMediationResult], level: f64) {
    let p: Vec<f64> = rows.iter().map(|r| r.p_max).collect();
    for (r, q) in rows.iter_mut().zip(bh_adjust(&p)) {
        r.p_adjusted = q;
        r.significant = q <= level;
    }
}

pub(crate) fn direct_effect(outcome: &RegressionFit) -> DirectEffect {
    let i = outcome.index(EXPOSURE).expect("outcome model always contains the exposure");
    DirectEffect {
        estimate: outcome.coefficients[i],
        se: outcome.standard_errors[i],
        p_value: outcome.p_values[i],
    }
}

fn marginal_for<'a>(m: &'a GeneMarginals, pathway: Pathway) -> Option<&'a RegressionFit> {
    match pathway {
        Pathway::M => m.nb.as_ref(),
        Pathway::F => m.beta.as_ref(),
    }
}

/// Screen, fit the outcome model, estimate indirect effects and test each
/// screened pathway with the JS test and per-family BH adjustment.
pub fn run_medzisc(dataset: &PseudobulkDataset, config: &MediationConfig) -> Result<MediationReport> {
    let start = Instant::now();
    config.validate()?;
    let profile = covariate_profile(dataset, config)?;
    let screening = screen_mediators(dataset, config)?;
    let finals = fit_final_models(dataset, &screening)?;

    let mut warnings: Vec<String> = finals
        .dropped_terms
        .iter()
        .map(|t| format!("{t}: dropped from outcome model (collinear)"))
        .collect();
    let mut m_results = Vec::new();
    let mut f_results = Vec::new();
    for c in &screening.candidates {
        let j = dataset.gene_index(&c.gene).expect("candidate comes from this dataset");
        for (wanted, pathway) in [(c.include_m, Pathway::M), (c.include_f, Pathway::F)] {
            if !wanted {
                continue;
            }
            let Some(mediator) = marginal_for(&screening.marginals[j], pathway) else {
                continue;
            };
            let input = PathwayInputs {
                gene: j,
                pathway,
                outcome: &finals.outcome,
                mediator,
            };
            match pathway_result(&input, dataset, &profile, config) {
                Some(r) if pathway == Pathway::M => m_results.push(r),
                Some(r) => f_results.push(r),
                None => warnings.push(format!("{}: {} pathway not testable", c.gene, pathway.as_str())),
            }
        }
    }
    adjust_family(&mut m_results, config.level);
    adjust_family(&mut f_results, config.level);

    Ok(MediationReport {
        method: Method::Medzisc,
        direct_effect: direct_effect(&finals.outcome),
        m_results,
        f_results,
        screening: Some(screening),
        warnings,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}
