use std::collections::HashMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CoefficientMode, Range, ScenarioConfig};
use super::rng::{stream_rng, Stream};
use super::zinb::sample_zinb;
use crate::data::{aggregate_pseudobulk, filter_degenerate_genes, CellCountMatrix, DegenerateGeneReport, PseudobulkDataset, Subject, SubjectTable};
use crate::error::{Error, Result};
use crate::glm::special::expit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediatorType {
    None,
    Both,
    MOnly,
    FOnly,
}

impl MediatorType {
    pub fn as_str(&self) -> &'static str {
        match self {
            MediatorType::None => "none",
            MediatorType::Both => "both",
            MediatorType::MOnly => "m_only",
            MediatorType::FOnly => "f_only",
        }
    }

    pub fn in_m_family(&self) -> bool {
        matches!(self, MediatorType::Both | MediatorType::MOnly)
    }

    pub fn in_f_family(&self) -> bool {
        matches!(self, MediatorType::Both | MediatorType::FOnly)
    }
}

/// Ground truth of one replicate. Inactive coefficients are exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub gene_names: Vec<String>,
    pub mediator_type: Vec<MediatorType>,
    /// Exposure effect on logit(π).
    pub alpha_x: Vec<f64>,
    /// Exposure effect on log(μ).
    pub gamma_x: Vec<f64>,
    pub beta_m: Vec<f64>,
    pub beta_f: Vec<f64>,
    pub dispersion: Vec<f64>,
    pub alpha_z: f64,
    pub gamma_z: f64,
    pub beta_x: f64,
    pub beta_z: Vec<f64>,
}

impl SimulationTruth {
    /// Genes mediating through `M` (both-path and M-only).
    pub fn m_family(&self) -> Vec<String> {
        self.family(MediatorType::in_m_family)
    }

    /// Genes mediating through `F` (both-path and F-only).
    pub fn f_family(&self) -> Vec<String> {
        self.family(MediatorType::in_f_family)
    }

    pub fn n_true(&self) -> usize {
        self.mediator_type.iter().filter(|t| **t != MediatorType::None).count()
    }

    fn family(&self, pred: fn(&MediatorType) -> bool) -> Vec<String> {
        self.gene_names
            .iter()
            .zip(&self.mediator_type)
            .filter(|(_, t)| pred(t))
            .map(|(g, _)| g.clone())
            .collect()
    }
}

/// Everything generated for one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub subjects: SubjectTable,
    pub cells: Vec<CellCountMatrix>,
    pub truth: SimulationTruth,
}

impl SimulatedDataset {
    /// Aggregated and filtered analysis dataset (outcome included).
    pub fn pseudobulk(&self) -> Result<(PseudobulkDataset, DegenerateGeneReport)> {
        let agg = aggregate_pseudobulk(&self.cells, &self.subjects)?;
        Ok(filter_degenerate_genes(&agg))
    }
}

fn uniform<R: Rng + ?Sized>(range: Range, rng: &mut R) -> f64 {
    range.low() + (range.high() - range.low()) * rng.random::<f64>()
}

fn gene_names(g: usize) -> Vec<String> {
    let width = g.to_string().len();
    (1..=g).map(|j| format!("gene{j:0width$}")).collect()
}

fn draw_truth(config: &ScenarioConfig, replicate: u64) -> SimulationTruth {
    let g = config.genes;
    let mut rng = stream_rng(config.seed, replicate, Stream::Truth, 0);
    let r = &config.ranges;
    let dispersion: Vec<f64> = (0..g).map(|_| uniform(r.dispersion, &mut rng)).collect();

    let (n_both, n_m, _) = config.mediator_counts();
    let chosen = sample(&mut rng, g, config.n_true()).into_vec();
    let mut mediator_type = vec![MediatorType::None; g];
    for (k, &gene) in chosen.iter().enumerate() {
        mediator_type[gene] = if k < n_both {
            MediatorType::Both
        } else if k < n_both + n_m {
            MediatorType::MOnly
        } else {
            MediatorType::FOnly
        };
    }

    let mut alpha_x = vec![0.0; g];
    let mut gamma_x = vec![0.0; g];
    let mut beta_m = vec![0.0; g];
    let mut beta_f = vec![0.0; g];
    let literal = config.coefficient_mode == CoefficientMode::Literal;
    for j in 0..g {
        match mediator_type[j] {
            MediatorType::None => {}
            MediatorType::Both => {
                alpha_x[j] = uniform(r.both_alpha_x, &mut rng);
                gamma_x[j] = uniform(r.both_gamma_x, &mut rng);
                beta_m[j] = uniform(r.both_beta_m, &mut rng);
                beta_f[j] = uniform(r.both_beta_f, &mut rng);
            }
            MediatorType::MOnly => {
                let e = uniform(r.m_only_exposure, &mut rng);
                if literal {
                    alpha_x[j] = e;
                } else {
                    gamma_x[j] = e;
                }
                beta_m[j] = uniform(r.m_only_beta_m, &mut rng);
            }
            MediatorType::FOnly => {
                let e = uniform(r.f_only_exposure, &mut rng);
                if literal {
                    gamma_x[j] = e;
                } else {
                    alpha_x[j] = e;
                }
                beta_f[j] = uniform(r.f_only_beta_f, &mut rng);
            }
        }
    }
    SimulationTruth {
        gene_names: gene_names(g),
        mediator_type,
        alpha_x,
        gamma_x,
        beta_m,
        beta_f,
        dispersion,
        alpha_z: config.fixed.alpha_z,
        gamma_z: config.fixed.gamma_z,
        beta_x: config.fixed.beta_x,
        beta_z: config.fixed.beta_z.clone(),
    }
}

/// Subject-level `(π, μ)` of gene `gene` for exposure `x` and covariates `z`.
pub fn zinb_parameters(truth: &SimulationTruth, gene: usize, x: f64, z: &[f64]) -> (f64, f64) {
    let zsum: f64 = z.iter().sum();
    let pi = expit(truth.alpha_x[gene] * x + truth.alpha_z * zsum);
    let mu = (truth.gamma_x[gene] * x + truth.gamma_z * zsum).exp();
    (pi, mu)
}

fn draw_subjects(config: &ScenarioConfig, replicate: u64) -> Result<SubjectTable> {
    let mut rng = stream_rng(config.seed, replicate, Stream::Subjects, 0);
    let k = config.n_covariates();
    let width = config.n.to_string().len();
    let subjects = (0..config.n)
        .map(|i| {
            let exposure = if rng.random::<f64>() < config.fixed.exposure_probability { 1.0 } else { 0.0 };
            let covariates = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
            Subject {
                id: format!("subject{:0width$}", i + 1),
                exposure,
                covariates,
                outcome: None,
            }
        })
        .collect();
    SubjectTable::new((1..=k).map(|j| format!("Z{j}")).collect(), subjects)
}

fn draw_cells(config: &ScenarioConfig, replicate: u64, truth: &SimulationTruth, subjects: &SubjectTable) -> Result<Vec<CellCountMatrix>> {
    let g = config.genes;
    let c = config.cells;
    subjects
        .subjects()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut values = vec![0.0; c * g];
            for j in 0..g {
                let (pi, mu) = zinb_parameters(truth, j, s.exposure, &s.covariates);
                let mut rng = stream_rng(config.seed, replicate, Stream::Cells, (i * g + j) as u64);
                let draws = sample_zinb(mu, truth.dispersion[j], pi, c, &mut rng)?;
                for (cell, v) in draws.into_iter().enumerate() {
                    values[cell * g + j] = v as f64;
                }
            }
            CellCountMatrix::new(s.id.clone(), truth.gene_names.clone(), c, values)
        })
        .collect()
}

/// Linear outcome `β_X X + β_Zᵀ Z + Σ β_M M_g + Σ β_F F_g + ε`, with `ε ~ N(0, noise_sd²)`.
///
/// `aggregates` must contain every gene named in `truth` (unfiltered aggregation).
pub fn simulate_outcome<R: Rng + ?Sized>(
    truth: &SimulationTruth,
    aggregates: &PseudobulkDataset,
    noise_sd: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let index: HashMap<&str, usize> = aggregates.gene_names.iter().enumerate().map(|(j, g)| (g.as_str(), j)).collect();
    let mut active = Vec::new();
    for (t, name) in truth.gene_names.iter().enumerate() {
        if truth.beta_m[t] != 0.0 || truth.beta_f[t] != 0.0 {
            let j = *index
                .get(name.as_str())
                .ok_or_else(|| Error::Structural(format!("aggregates lack mediator gene {name}")))?;
            active.push((j, truth.beta_m[t], truth.beta_f[t]));
        }
    }
    let subjects = aggregates.subjects.subjects();
    if subjects.first().is_some_and(|s| s.covariates.len() != truth.beta_z.len()) {
        return Err(Error::Structural("covariate count differs from beta_z".into()));
    }
    Ok(subjects
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut y = truth.beta_x * s.exposure + s.covariates.iter().zip(&truth.beta_z).map(|(z, b)| z * b).sum::<f64>();
            for &(j, bm, bf) in &active {
                y += bm * aggregates.m[(i, j)] + bf * aggregates.f[(i, j)];
            }
            let eps: f64 = StandardNormal.sample(rng);
            y + noise_sd * eps
        })
        .collect())
}

/// One replicate: subjects, truth, cell counts and outcome, all derived from
/// `(config.seed, replicate)`.
pub fn generate_replicate(config: &ScenarioConfig, replicate: u64) -> Result<SimulatedDataset> {
    config.validate()?;
    let truth = draw_truth(config, replicate);
    let mut subjects = draw_subjects(config, replicate)?;
    let cells = draw_cells(config, replicate, &truth, &subjects)?;
    let aggregates = aggregate_pseudobulk(&cells, &subjects)?;
    let mut rng = stream_rng(config.seed, replicate, Stream::Outcome, 0);
    let y = simulate_outcome(&truth, &aggregates, config.noise_sd, &mut rng)?;
    subjects.set_outcomes(&y)?;
    Ok(SimulatedDataset { subjects, cells, truth })
}
