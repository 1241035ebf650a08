use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CellCountMatrix, PseudobulkDataset, SubjectTable};
use crate::error::{Error, Result};

pub const ZERO_PROPORTION_FLOOR: f64 = 0.001;
pub const ZERO_PROPORTION_CEIL: f64 = 0.999;

/// Bound a zero proportion away from 0 and 1 so beta regression stays defined.
pub fn clamp_zero_proportion(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::Domain(format!("zero proportion {f} outside [0, 1]")));
    }
    Ok(f.clamp(ZERO_PROPORTION_FLOOR, ZERO_PROPORTION_CEIL))
}

/// Raw `F` is constant at 0 (expressed in every cell) or at 1 (never expressed)
/// for every subject, leaving nothing to regress.
pub(crate) fn raw_f_degenerate(f_raw: &DMatrix<f64>, gene: usize) -> bool {
    let col = f_raw.column(gene);
    col.iter().all(|&v| v == 0.0) || col.iter().all(|&v| v == 1.0)
}

/// Per-subject mean expression and zero fraction for every gene.
///
/// Rows of the result follow the order of `subjects`; each subject uses its own
/// cell count as denominator.
pub fn aggregate_pseudobulk(
    cells: &[CellCountMatrix],
    subjects: &SubjectTable,
) -> Result<PseudobulkDataset> {
    let by_id: HashMap<&str, &CellCountMatrix> =
        cells.iter().map(|c| (c.subject_id(), c)).collect();
    let missing: Vec<&str> = subjects.ids().filter(|id| !by_id.contains_key(id)).collect();
    if !missing.is_empty() {
        return Err(Error::Structural(format!(
            "no cell counts for subjects: {}",
            missing.join(", ")
        )));
    }
    let ordered: Vec<&CellCountMatrix> = subjects.ids().map(|id| by_id[id]).collect();
    let gene_names = match ordered.first() {
        Some(first) => first.gene_names().to_vec(),
        None => Vec::new(),
    };
    if let Some(bad) = ordered.iter().find(|c| c.gene_names() != gene_names.as_slice()) {
        return Err(Error::Structural(format!(
            "gene list of subject {} differs from subject {}",
            bad.subject_id(),
            ordered[0].subject_id()
        )));
    }

    let g = gene_names.len();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = ordered
        .par_iter()
        .map(|mat| {
            let mut sums = vec![0.0; g];
            let mut zeros = vec![0usize; g];
            for c in 0..mat.n_cells() {
                for (j, &v) in mat.cell(c).iter().enumerate() {
                    sums[j] += v;
                    if v == 0.0 {
                        zeros[j] += 1;
                    }
                }
            }
            let denom = mat.n_cells() as f64;
            (
                sums.into_iter().map(|s| s / denom).collect(),
                zeros.into_iter().map(|z| z as f64 / denom).collect(),
            )
        })
        .collect();

    let n = ordered.len();
    let m = DMatrix::from_fn(n, g, |i, j| rows[i].0[j]);
    let f_raw = DMatrix::from_fn(n, g, |i, j| rows[i].1[j]);
    PseudobulkDataset::from_matrices(subjects.clone(), gene_names, m, f_raw)
}

/// Genes touched by [`filter_degenerate_genes`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DegenerateGeneReport {
    /// Never expressed in any cell of any subject.
    pub removed: Vec<String>,
    /// Kept, but with the zero-proportion pathway disabled.
    pub f_dropped: Vec<String>,
}

/// Drop genes with no expression anywhere and disable the `F` pathway where raw
/// `F` is constant (0 for all subjects, or 1 for all subjects).
pub fn filter_degenerate_genes(
    dataset: &PseudobulkDataset,
) -> (PseudobulkDataset, DegenerateGeneReport) {
    let mut report = DegenerateGeneReport::default();
    let mut keep = Vec::with_capacity(dataset.n_genes());
    for j in 0..dataset.n_genes() {
        if dataset.m.column(j).iter().all(|&v| v == 0.0) {
            report.removed.push(dataset.gene_names[j].clone());
        } else {
            keep.push(j);
        }
    }
    let mut out = dataset.select_genes(&keep);
    for j in 0..out.n_genes() {
        if raw_f_degenerate(&out.f_raw, j) {
            out.f_modeled[j] = false;
            report.f_dropped.push(out.gene_names[j].clone());
        }
    }
    (out, report)
}
