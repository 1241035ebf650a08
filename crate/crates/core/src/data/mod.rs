//! Subject metadata, cell-level count matrices and the subject-level
//! co-mediator matrices (mean expression `M`, zero proportion `F`) derived
//! from them.

mod aggregate;

pub use aggregate::{
    aggregate_pseudobulk, clamp_zero_proportion, filter_degenerate_genes, DegenerateGeneReport,
    ZERO_PROPORTION_CEIL, ZERO_PROPORTION_FLOOR,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the subject table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub exposure: f64,
    pub covariates: Vec<f64>,
    pub outcome: Option<f64>,
}

/// Exposure, covariates and (optionally) outcome for every subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTable {
    covariate_names: Vec<String>,
    subjects: Vec<Subject>,
}

impl SubjectTable {
    pub fn new(covariate_names: Vec<String>, subjects: Vec<Subject>) -> Result<Self> {
        let k = covariate_names.len();
        let mut seen = std::collections::HashSet::new();
        for s in &subjects {
            if s.covariates.len() != k {
                return Err(Error::Structural(format!(
                    "subject {} has {} covariates, expected {}",
                    s.id,
                    s.covariates.len(),
                    k
                )));
            }
            if !s.exposure.is_finite() || s.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::Domain(format!(
                    "subject {} has a missing or non-finite exposure/covariate",
                    s.id
                )));
            }
            if let Some(y) = s.outcome {
                if !y.is_finite() {
                    return Err(Error::Domain(format!("subject {} has non-finite outcome", s.id)));
                }
            }
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Structural(format!("duplicate subject id {}", s.id)));
            }
        }
        Ok(Self {
            covariate_names,
            subjects,
        })
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn n_covariates(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.subjects.iter().map(|s| s.id.as_str())
    }

    pub fn exposures(&self) -> Vec<f64> {
        self.subjects.iter().map(|s| s.exposure).collect()
    }

    pub fn covariate_column(&self, k: usize) -> Vec<f64> {
        self.subjects.iter().map(|s| s.covariates[k]).collect()
    }

    /// Column means of the covariates, the default profile for effect estimates.
    pub fn covariate_means(&self) -> Vec<f64> {
        let n = self.len().max(1) as f64;
        (0..self.n_covariates())
            .map(|k| self.subjects.iter().map(|s| s.covariates[k]).sum::<f64>() / n)
            .collect()
    }

    pub fn has_outcome(&self) -> bool {
        self.subjects.iter().all(|s| s.outcome.is_some())
    }

    /// Outcome vector; fails naming the first subjects that lack `Y`.
    pub fn outcomes(&self) -> Result<Vec<f64>> {
        let missing: Vec<&str> = self
            .subjects
            .iter()
            .filter(|s| s.outcome.is_none())
            .map(|s| s.id.as_str())
            .take(5)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Structural(format!(
                "outcome Y missing for subjects: {}",
                missing.join(", ")
            )));
        }
        Ok(self.subjects.iter().map(|s| s.outcome.unwrap()).collect())
    }

    pub fn set_outcomes(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.len() {
            return Err(Error::Structural(format!(
                "outcome vector has length {}, expected {}",
                y.len(),
                self.len()
            )));
        }
        for (s, &v) in self.subjects.iter_mut().zip(y) {
            s.outcome = Some(v);
        }
        Ok(())
    }
}

/// Cells × genes expression values for one subject, stored row-major.
///
/// Values are normally raw integer counts; already-normalized real values are
/// accepted as long as they are finite and non-negative (exact zeros stay zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct CellCountMatrix {
    subject_id: String,
    gene_names: Vec<String>,
    n_cells: usize,
    values: Vec<f64>,
}

impl CellCountMatrix {
    pub fn new(
        subject_id: impl Into<String>,
        gene_names: Vec<String>,
        n_cells: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        if n_cells == 0 {
            return Err(Error::Structural(format!("subject {subject_id} has no cells")));
        }
        if values.len() != n_cells * gene_names.len() {
            return Err(Error::Structural(format!(
                "subject {subject_id}: {} values for {n_cells} cells x {} genes",
                values.len(),
                gene_names.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Domain(format!(
                "subject {subject_id}: count {v} is negative or non-finite"
            )));
        }
        Ok(Self {
            subject_id,
            gene_names,
            n_cells,
            values,
        })
    }

    /// Build from integer counts, one inner vector per cell.
    pub fn from_counts(
        subject_id: impl Into<String>,
        gene_names: Vec<String>,
        cells: &[Vec<u64>],
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let g = gene_names.len();
        if let Some(bad) = cells.iter().position(|c| c.len() != g) {
            return Err(Error::Structural(format!(
                "subject {subject_id}: cell {bad} has {} genes, expected {g}",
                cells[bad].len()
            )));
        }
        let values = cells.iter().flatten().map(|&c| c as f64).collect();
        Self::new(subject_id, gene_names, cells.len(), values)
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn cell(&self, c: usize) -> &[f64] {
        let g = self.n_genes();
        &self.values[c * g..(c + 1) * g]
    }

    pub fn get(&self, cell: usize, gene: usize) -> f64 {
        self.values[cell * self.n_genes() + gene]
    }
}

/// Subject-level co-mediators ready for analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudobulkDataset {
    pub subjects: SubjectTable,
    pub gene_names: Vec<String>,
    /// n × G mean expression.
    pub m: DMatrix<f64>,
    /// n × G zero proportion clamped into [0.001, 0.999].
    pub f: DMatrix<f64>,
    /// n × G zero proportion before clamping; drives the degenerate-gene rules.
    pub f_raw: DMatrix<f64>,
    /// Whether the zero-proportion pathway is modeled for each gene.
    pub f_modeled: Vec<bool>,
}

impl PseudobulkDataset {
    /// Assemble from precomputed `M` and raw `F` matrices (rows follow `subjects`).
    pub fn from_matrices(
        subjects: SubjectTable,
        gene_names: Vec<String>,
        m: DMatrix<f64>,
        f_raw: DMatrix<f64>,
    ) -> Result<Self> {
        let n = subjects.len();
        let g = gene_names.len();
        if m.shape() != (n, g) || f_raw.shape() != (n, g) {
            return Err(Error::Structural(format!(
                "M is {:?} and F is {:?}, expected ({n}, {g})",
                m.shape(),
                f_raw.shape()
            )));
        }
        if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("M contains negative or non-finite entries".into()));
        }
        let mut f = f_raw.clone();
        for v in f.iter_mut() {
            *v = clamp_zero_proportion(*v)?;
        }
        let f_modeled = (0..g).map(|j| !aggregate::raw_f_degenerate(&f_raw, j)).collect();
        Ok(Self {
            subjects,
            gene_names,
            m,
            f,
            f_raw,
            f_modeled,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.subjects.len()
    }

    pub fn n_genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn m_column(&self, gene: usize) -> Vec<f64> {
        self.m.column(gene).iter().copied().collect()
    }

    pub fn f_column(&self, gene: usize) -> Vec<f64> {
        self.f.column(gene).iter().copied().collect()
    }

    pub fn gene_index(&self, name: &str) -> Option<usize> {
        self.gene_names.iter().position(|g| g == name)
    }

    /// Keep only the listed gene columns, in the given order.
    pub fn select_genes(&self, keep: &[usize]) -> Self {
        let n = self.n_subjects();
        let pick = |src: &DMatrix<f64>| DMatrix::from_fn(n, keep.len(), |i, j| src[(i, keep[j])]);
        Self {
            subjects: self.subjects.clone(),
            gene_names: keep.iter().map(|&j| self.gene_names[j].clone()).collect(),
            m: pick(&self.m),
            f: pick(&self.f),
            f_raw: pick(&self.f_raw),
            f_modeled: keep.iter().map(|&j| self.f_modeled[j]).collect(),
        }
    }
}
