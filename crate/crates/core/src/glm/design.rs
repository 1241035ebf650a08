use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(Intercept)";

/// Named regressor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Structural(format!(
                "{} column names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != n) {
            return Err(Error::Structural(format!(
                "column {} has {} rows, expected {n}",
                names[j],
                columns[j].len()
            )));
        }
        let values = DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]);
        Self::from_matrix(names, values)
    }

    pub fn from_matrix(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::Structural(format!(
                "{} column names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Structural(format!("duplicate column name {dup}")));
        }
        if let Some((k, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let col = k / values.nrows().max(1);
            return Err(Error::Domain(format!("non-finite entry in column {}", names[col])));
        }
        Ok(Self { names, values })
    }

    /// An intercept column followed by the given columns.
    pub fn with_intercept(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let mut all_names = vec![INTERCEPT.to_string()];
        all_names.extend(names);
        let mut all = vec![vec![1.0; n]];
        all.extend_from_slice(columns);
        Self::from_columns(all_names, &all)
    }

    /// Intercept-only design for `n` rows.
    pub fn intercept_only(n: usize) -> Self {
        Self {
            names: vec![INTERCEPT.to_string()],
            values: DMatrix::from_element(n, 1, 1.0),
        }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn has_intercept(&self) -> bool {
        self.column_index(INTERCEPT).is_some()
    }

    /// Subset of columns by index, preserving the given order.
    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            values: self.values.select_columns(keep),
        }
    }

    /// Subset of rows by index.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            values: self.values.select_rows(rows),
        }
    }

    /// Indices of columns lying (numerically) in the span of earlier columns.
    ///
    /// Modified Gram-Schmidt in column order; a column whose residual norm falls
    /// below `1e-9` of its own norm (or is identically zero) is flagged.
    pub fn dependent_columns(&self) -> Vec<usize> {
        let n = self.nrows();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut dependent = Vec::new();
        for j in 0..self.ncols() {
            let mut v: Vec<f64> = self.values.column(j).iter().copied().collect();
            let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for q in &basis {
                let dot: f64 = (0..n).map(|i| q[i] * v[i]).sum();
                for i in 0..n {
                    v[i] -= dot * q[i];
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm0 == 0.0 || norm <= 1e-9 * norm0 {
                dependent.push(j);
            } else {
                basis.push(v.into_iter().map(|a| a / norm).collect());
            }
        }
        dependent
    }

    pub(crate) fn require_full_rank(&self) -> Result<()> {
        let dep = self.dependent_columns();
        if dep.is_empty() {
            Ok(())
        } else {
            Err(Error::SingularDesign {
                columns: dep.into_iter().map(|j| self.names[j].clone()).collect(),
            })
        }
    }
}
