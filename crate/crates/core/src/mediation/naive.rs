use std::time::Instant;

use rayon::prelude::*;

use super::pipeline::{adjust_family, covariate_profile, direct_effect, pathway_result, PathwayInputs};
use super::report::{GeneMediationResult, MediationReport, Method, Pathway};
use super::screening::{base_columns, fit_marginals, GeneMarginals};
use super::{f_term, m_term, MediationConfig, NaiveOutcome};
use crate::data::PseudobulkDataset;
use crate::error::Result;
use crate::glm::{fit_ols, DesignMatrix, RegressionFit};

struct GeneOutcome<'a> {
    dataset: &'a PseudobulkDataset,
    y: &'a [f64],
    base_names: &'a [String],
    base_cols: &'a [Vec<f64>],
}

impl GeneOutcome<'_> {
    fn fit(&self, gene: usize, pathways: &[Pathway]) -> Result<RegressionFit> {
        let name = &self.dataset.gene_names[gene];
        let mut names = self.base_names.to_vec();
        let mut cols = self.base_cols.to_vec();
        for p in pathways {
            match p {
                Pathway::M => {
                    names.push(m_term(name));
                    cols.push(self.dataset.m_column(gene));
                }
                Pathway::F => {
                    names.push(f_term(name));
                    cols.push(self.dataset.f_column(gene));
                }
            }
        }
        fit_ols(self.y, &DesignMatrix::with_intercept(names, &cols)?)
    }
}

fn analyze_gene(
    gene: usize,
    outcome: &GeneOutcome<'_>,
    marginals: &GeneMarginals,
    profile: &[f64],
    config: &MediationConfig,
) -> (Vec<GeneMediationResult>, Vec<String>) {
    let dataset = outcome.dataset;
    let name = &dataset.gene_names[gene];
    let mut pathways = vec![Pathway::M];
    if dataset.f_modeled[gene] {
        pathways.push(Pathway::F);
    }
    let joint = match config.naive_outcome {
        NaiveOutcome::Joint => Some(outcome.fit(gene, &pathways)),
        NaiveOutcome::Separate => None,
    };

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &pathway in &pathways {
        let (fit, err) = match pathway {
            Pathway::M => (marginals.nb.as_ref(), &marginals.nb_error),
            Pathway::F => (marginals.beta.as_ref(), &marginals.beta_error),
        };
        let Some(mediator) = fit else {
            if let Some(e) = err {
                warnings.push(format!("{name}: {} mediator model failed ({e})", pathway.as_str()));
            }
            continue;
        };
        let separate;
        let fitted = match &joint {
            Some(f) => f.as_ref(),
            None => {
                separate = outcome.fit(gene, &[pathway]);
                separate.as_ref()
            }
        };
        let outcome_fit = match fitted {
            Ok(f) => f,
            Err(e) => {
                warnings.push(format!("{name}: {} outcome model failed ({e})", pathway.as_str()));
                continue;
            }
        };
        let input = PathwayInputs {
            gene,
            pathway,
            outcome: outcome_fit,
            mediator,
        };
        match pathway_result(&input, dataset, profile, config) {
            Some(r) => rows.push(r),
            None => warnings.push(format!("{name}: {} pathway not testable", pathway.as_str())),
        }
    }
    (rows, warnings)
}

/// Marginal baseline: every gene gets its own outcome model(s) and mediator
/// models with no screening; JS p-values are BH-adjusted over all genes in
/// each family.
pub fn run_naive(dataset: &PseudobulkDataset, config: &MediationConfig) -> Result<MediationReport> {
    let start = Instant::now();
    config.validate()?;
    let y = dataset.subjects.outcomes()?;
    let profile = covariate_profile(dataset, config)?;
    let marginals = fit_marginals(dataset)?;
    let (base_names, base_cols) = base_columns(dataset);
    let direct = direct_effect(&fit_ols(&y, &DesignMatrix::with_intercept(base_names.clone(), &base_cols)?)?);
    let outcome = GeneOutcome {
        dataset,
        y: &y,
        base_names: &base_names,
        base_cols: &base_cols,
    };

    let per_gene: Vec<_> = (0..dataset.n_genes())
        .into_par_iter()
        .map(|j| analyze_gene(j, &outcome, &marginals[j], &profile, config))
        .collect();

    let mut m_results = Vec::new();
    let mut f_results = Vec::new();
    let mut warnings = Vec::new();
    for (rows, w) in per_gene {
        for r in rows {
            match r.pathway {
                Pathway::M => m_results.push(r),
                Pathway::F => f_results.push(r),
            }
        }
        warnings.extend(w);
    }
    for w in &warnings {
        log::warn!("naive: {w}");
    }
    adjust_family(&mut m_results, config.level);
    adjust_family(&mut f_results, config.level);

    Ok(MediationReport {
        method: Method::Naive,
        direct_effect: direct,
        m_results,
        f_results,
        screening: None,
        warnings,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}
