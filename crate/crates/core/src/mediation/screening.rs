use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{f_term, m_term, MediationConfig, ScreeningRule, EXPOSURE};
use crate::data::PseudobulkDataset;
use crate::error::Result;
use crate::glm::{
    fit_beta_regression, fit_lasso, fit_nb_regression, BetaOptions, DesignMatrix, LassoOptions, NbOptions,
    RegressionFit,
};

/// A gene kept by screening and the outcome-model terms it contributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateGene {
    pub gene: String,
    pub include_m: bool,
    pub include_f: bool,
}

/// Marginal mediator-model fits of one gene (`M ~ X + Z` by NB, `F ~ X + Z` by beta).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeneMarginals {
    pub nb: Option<RegressionFit>,
    pub beta: Option<RegressionFit>,
    pub nb_error: Option<String>,
    pub beta_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub rule: ScreeningRule,
    pub lambda: f64,
    /// `G_Y`: genes with a nonzero Lasso coefficient on M or F.
    pub lasso_selected: Vec<String>,
    /// `G_M`: significant exposure effect in the marginal NB model.
    pub g_m: Vec<String>,
    /// `G_F`: significant exposure effect in the marginal beta model.
    pub g_f: Vec<String>,
    /// `S`, in dataset gene order.
    pub candidates: Vec<CandidateGene>,
    /// Marginal fits for every dataset gene, reused by the final stage.
    #[serde(skip)]
    pub marginals: Vec<GeneMarginals>,
}

/// Exposure and covariate columns (no intercept).
pub(crate) fn base_columns(dataset: &PseudobulkDataset) -> (Vec<String>, Vec<Vec<f64>>) {
    let subjects = &dataset.subjects;
    let mut names = vec![EXPOSURE.to_string()];
    names.extend(subjects.covariate_names().iter().cloned());
    let mut cols = vec![subjects.exposures()];
    cols.extend((0..subjects.n_covariates()).map(|k| subjects.covariate_column(k)));
    (names, cols)
}

pub(crate) fn mediator_design(dataset: &PseudobulkDataset) -> Result<DesignMatrix> {
    let (names, cols) = base_columns(dataset);
    DesignMatrix::with_intercept(names, &cols)
}

fn describe(fit: &std::result::Result<RegressionFit, crate::Error>) -> Option<String> {
    match fit {
        Ok(f) if f.converged => None,
        Ok(f) => Some(format!("no convergence after {} iterations", f.iterations)),
        Err(e) => Some(e.to_string()),
    }
}

/// Per-gene marginal NB and beta fits, computed in parallel and returned in gene order.
pub(crate) fn fit_marginals(dataset: &PseudobulkDataset) -> Result<Vec<GeneMarginals>> {
    let design = mediator_design(dataset)?;
    Ok((0..dataset.n_genes())
        .into_par_iter()
        .map(|j| {
            let nb = fit_nb_regression(&dataset.m_column(j), &design, &NbOptions::default());
            let nb_error = describe(&nb);
            let (beta, beta_error) = if dataset.f_modeled[j] {
                let fit = fit_beta_regression(&dataset.f_column(j), &design, &BetaOptions::default());
                let err = describe(&fit);
                (fit.ok().filter(|f| f.converged), err)
            } else {
                (None, None)
            };
            GeneMarginals {
                nb: nb.ok().filter(|f| f.converged),
                beta,
                nb_error,
                beta_error,
            }
        })
        .collect())
}

pub(crate) fn exposure_p(fit: &Option<RegressionFit>) -> Option<f64> {
    fit.as_ref().and_then(|f| f.p_value(EXPOSURE)).filter(|p| p.is_finite())
}

/// Lasso outcome screen plus marginal exposure tests.
pub fn screen_mediators(dataset: &PseudobulkDataset, config: &MediationConfig) -> Result<ScreeningResult> {
    config.validate()?;
    let y = dataset.subjects.outcomes()?;
    let (mut names, mut cols) = base_columns(dataset);
    let unpenalized = names.clone();
    for j in 0..dataset.n_genes() {
        names.push(m_term(&dataset.gene_names[j]));
        cols.push(dataset.m_column(j));
        if dataset.f_modeled[j] {
            names.push(f_term(&dataset.gene_names[j]));
            cols.push(dataset.f_column(j));
        }
    }
    let design = DesignMatrix::from_columns(names, &cols)?;
    let lasso_opts = LassoOptions {
        lambda: config.lambda_choice(),
        ..Default::default()
    };
    let lasso = fit_lasso(&y, &design, &unpenalized, &lasso_opts)?;

    let marginals = fit_marginals(dataset)?;
    let mut lasso_selected = Vec::new();
    let mut g_m = Vec::new();
    let mut g_f = Vec::new();
    let mut candidates = Vec::new();
    for (j, gene) in dataset.gene_names.iter().enumerate() {
        let in_y = lasso.is_selected(&m_term(gene)) || lasso.is_selected(&f_term(gene));
        let in_m = exposure_p(&marginals[j].nb).is_some_and(|p| p <= config.screening_level);
        let in_f = dataset.f_modeled[j] && exposure_p(&marginals[j].beta).is_some_and(|p| p <= config.screening_level);
        if let Some(e) = &marginals[j].nb_error {
            log::warn!("gene {gene}: marginal NB fit excluded ({e})");
        }
        if let Some(e) = &marginals[j].beta_error {
            log::warn!("gene {gene}: marginal beta fit excluded ({e})");
        }
        if in_y {
            lasso_selected.push(gene.clone());
        }
        if in_m {
            g_m.push(gene.clone());
        }
        if in_f {
            g_f.push(gene.clone());
        }
        let keep = match config.screening_rule {
            ScreeningRule::Conjunction => in_y && (in_m || in_f),
            ScreeningRule::Union => in_y || in_m || in_f,
        };
        if keep {
            candidates.push(CandidateGene {
                gene: gene.clone(),
                include_m: in_m,
                include_f: in_f,
            });
        }
    }
    Ok(ScreeningResult {
        rule: config.screening_rule,
        lambda: lasso.lambda,
        lasso_selected,
        g_m,
        g_f,
        candidates,
        marginals,
    })
}
