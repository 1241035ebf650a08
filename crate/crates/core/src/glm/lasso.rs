//! Lasso linear regression by cyclic coordinate descent.
//!
//! Objective: `(1/2n)‖y − Uγ − Pβ‖² + λ Σ|β_j|`, where `U` holds the
//! unpenalized columns (always including an intercept) and `P` the penalized
//! columns, standardized to zero mean and unit (population) variance.
//! Reported coefficients are on the original column scale.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DesignMatrix, INTERCEPT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Fixed(f64),
    /// K-fold cross-validation over a log-spaced path, minimum mean squared error.
    CrossValidated { folds: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy)]
pub struct LassoOptions {
    pub lambda: LambdaChoice,
    /// Stop when the largest change in a sweep, `max_j (x_jᵀx_j / n)·Δβ_j²`,
    /// falls below `tol` times the variance of `y` left by the unpenalized fit.
    pub tol: f64,
    pub max_sweeps: usize,
    pub n_lambda: usize,
    /// Smallest path value as a fraction of `λ_max`.
    pub min_ratio: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            lambda: LambdaChoice::CrossValidated { folds: 10, seed: 0 },
            tol: 1e-7,
            max_sweeps: 10_000,
            n_lambda: 100,
            min_ratio: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    /// Column names; an intercept is prepended when the design lacked one.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// Penalized predictors with a nonzero coefficient, in column order.
    pub selected: Vec<String>,
    pub unpenalized: Vec<String>,
    /// Penalized columns that were constant and therefore never entered.
    pub dropped: Vec<String>,
    pub sweeps: usize,
    pub converged: bool,
    /// `(λ, mean squared CV error)` along the path when λ was cross-validated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cv_curve: Vec<(f64, f64)>,
}

impl LassoFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn is_selected(&self, name: &str) -> bool {
        self.selected.iter().any(|s| s == name)
    }
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Column roles and the standardized problem built from one set of rows.
struct Problem {
    n: usize,
    y: DVector<f64>,
    /// Unpenalized block, intercept first when it was added.
    u: DMatrix<f64>,
    /// `(UᵀU)⁻¹Uᵀ`.
    u_solve: DMatrix<f64>,
    /// Standardized penalized columns (only the non-constant ones).
    p: DMatrix<f64>,
    /// For each standardized column: original design index, mean, sd.
    p_meta: Vec<(usize, f64, f64)>,
    /// `u_kᵀu_k / n` per unpenalized column.
    u_scale: Vec<f64>,
    /// Convergence reference: mean squared residual of `y` on the unpenalized block.
    null_variance: f64,
}

struct Layout {
    names: Vec<String>,
    added_intercept: bool,
    unpenalized: Vec<usize>,
    penalized: Vec<usize>,
}

impl Layout {
    fn new(design: &DesignMatrix, unpenalized: &[String]) -> Result<Self> {
        for name in unpenalized {
            if design.column_index(name).is_none() {
                return Err(Error::Structural(format!("unpenalized column {name} not in design")));
            }
        }
        let intercept = design.column_index(INTERCEPT);
        let mut unpen: Vec<usize> = (0..design.ncols())
            .filter(|&j| Some(j) == intercept || unpenalized.contains(&design.names()[j]))
            .collect();
        unpen.sort_unstable();
        let penalized = (0..design.ncols()).filter(|j| !unpen.contains(j)).collect();
        let mut names = Vec::with_capacity(design.ncols() + 1);
        if intercept.is_none() {
            names.push(INTERCEPT.to_string());
        }
        names.extend(design.names().iter().cloned());
        Ok(Self {
            names,
            added_intercept: intercept.is_none(),
            unpenalized: unpen,
            penalized,
        })
    }

    /// Position of design column `j` in the reported coefficient vector.
    fn slot(&self, j: usize) -> usize {
        j + usize::from(self.added_intercept)
    }

    fn intercept_slot(&self, design: &DesignMatrix) -> usize {
        if self.added_intercept {
            0
        } else {
            design.column_index(INTERCEPT).unwrap()
        }
    }
}

impl Problem {
    fn build(y: &[f64], design: &DesignMatrix, layout: &Layout, rows: &[usize]) -> Result<Self> {
        let n = rows.len();
        let x = design.matrix();
        let mut ucols: Vec<Vec<f64>> = Vec::new();
        if layout.added_intercept {
            ucols.push(vec![1.0; n]);
        }
        for &j in &layout.unpenalized {
            ucols.push(rows.iter().map(|&i| x[(i, j)]).collect());
        }
        let u = DMatrix::from_fn(n, ucols.len(), |i, k| ucols[k][i]);
        let gram = u.transpose() * &u;
        let inv = super::linalg::spd_inverse(&gram).ok_or_else(|| Error::SingularDesign {
            columns: layout.unpenalized.iter().map(|&j| design.names()[j].clone()).collect(),
        })?;
        let u_solve = inv * u.transpose();

        let mut p_meta = Vec::new();
        let mut pcols: Vec<Vec<f64>> = Vec::new();
        for &j in &layout.penalized {
            let col: Vec<f64> = rows.iter().map(|&i| x[(i, j)]).collect();
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            if sd <= 1e-12 * mean.abs().max(1.0) {
                continue;
            }
            pcols.push(col.iter().map(|v| (v - mean) / sd).collect());
            p_meta.push((j, mean, sd));
        }
        let p = DMatrix::from_fn(n, pcols.len(), |i, k| pcols[k][i]);
        let y = DVector::from_iterator(n, rows.iter().map(|&i| y[i]));
        let null_variance = (&y - &u * (&u_solve * &y)).norm_squared() / n as f64;
        let u_scale = u.column_iter().map(|c| c.norm_squared() / n as f64).collect();
        Ok(Self {
            n,
            y,
            u,
            u_solve,
            p,
            p_meta,
            u_scale,
            null_variance,
        })
    }

    fn lambda_max(&self) -> f64 {
        let gamma = &self.u_solve * &self.y;
        let r = &self.y - &self.u * gamma;
        (0..self.p.ncols())
            .map(|j| self.p.column(j).dot(&r).abs() / self.n as f64)
            .fold(0.0, f64::max)
    }
}

/// Coordinate-descent state for one standardized problem.
struct Solver<'a> {
    prob: &'a Problem,
    gamma: DVector<f64>,
    beta: DVector<f64>,
    resid: DVector<f64>,
}

impl<'a> Solver<'a> {
    fn new(prob: &'a Problem) -> Self {
        Self {
            prob,
            gamma: DVector::zeros(prob.u.ncols()),
            beta: DVector::zeros(prob.p.ncols()),
            resid: prob.y.clone(),
        }
    }

    #[cfg(test)]
    fn objective(&self, lambda: f64) -> f64 {
        self.resid.norm_squared() / (2.0 * self.prob.n as f64) + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// One pass: exact update of the unpenalized block, then each penalized
    /// coordinate in order. Returns the largest scaled squared change.
    fn sweep(&mut self, lambda: f64) -> f64 {
        let prob = self.prob;
        let nf = prob.n as f64;
        let delta_gamma = &prob.u_solve * &self.resid;
        let mut max_change = delta_gamma
            .iter()
            .zip(&prob.u_scale)
            .fold(0.0f64, |m, (d, w)| m.max(w * d * d));
        self.resid -= &prob.u * &delta_gamma;
        self.gamma += delta_gamma;
        for j in 0..prob.p.ncols() {
            let col = prob.p.column(j);
            let old = self.beta[j];
            let rho = col.dot(&self.resid) / nf + old;
            let new = soft_threshold(rho, lambda);
            if new != old {
                self.resid.axpy(old - new, &col, 1.0);
                self.beta[j] = new;
                max_change = max_change.max((new - old).powi(2));
            }
        }
        max_change
    }

    fn solve(&mut self, lambda: f64, tol: f64, max_sweeps: usize) -> (usize, bool) {
        for s in 1..=max_sweeps {
            if self.sweep(lambda) <= tol * self.prob.null_variance {
                return (s, true);
            }
        }
        (max_sweeps, false)
    }

    /// Coefficients on the original scale, laid out as in [`Layout::names`].
    fn original_scale(&self, design: &DesignMatrix, layout: &Layout) -> Vec<f64> {
        let mut coef = vec![0.0; layout.names.len()];
        let mut k = 0;
        if layout.added_intercept {
            coef[0] = self.gamma[0];
            k = 1;
        }
        for &j in &layout.unpenalized {
            coef[layout.slot(j)] = self.gamma[k];
            k += 1;
        }
        let icpt = layout.intercept_slot(design);
        for (b, &(j, mean, sd)) in self.beta.iter().zip(&self.prob.p_meta) {
            let orig = b / sd;
            coef[layout.slot(j)] = orig;
            coef[icpt] -= orig * mean;
        }
        coef
    }
}

/// Smallest λ at which every penalized coefficient is zero: `max_j |x̃_jᵀ r₀| / n`,
/// with `x̃_j` standardized and `r₀` the residual of `y` on the unpenalized columns.
pub fn lambda_max(y: &[f64], design: &DesignMatrix, unpenalized: &[String]) -> Result<f64> {
    let layout = Layout::new(design, unpenalized)?;
    let rows: Vec<usize> = (0..design.nrows()).collect();
    Ok(Problem::build(y, design, &layout, &rows)?.lambda_max())
}

fn lambda_path(lmax: f64, opts: &LassoOptions) -> Vec<f64> {
    let k = opts.n_lambda.max(2);
    if lmax <= 0.0 {
        return vec![0.0];
    }
    let lo = (lmax * opts.min_ratio).ln();
    let hi = lmax.ln();
    (0..k)
        .map(|i| (hi + (lo - hi) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

fn predict(design: &DesignMatrix, layout: &Layout, coef: &[f64], row: usize) -> f64 {
    let x = design.matrix();
    let mut v = if layout.added_intercept { coef[0] } else { 0.0 };
    for j in 0..design.ncols() {
        v += x[(row, j)] * coef[layout.slot(j)];
    }
    v
}

fn cross_validate(
    y: &[f64],
    design: &DesignMatrix,
    layout: &Layout,
    path: &[f64],
    folds: usize,
    seed: u64,
    opts: &LassoOptions,
) -> Result<Vec<f64>> {
    let n = y.len();
    let folds = folds.clamp(2, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }

    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..n).filter(|&i| assignment[i] != k).collect();
            let test: Vec<usize> = (0..n).filter(|&i| assignment[i] == k).collect();
            let prob = Problem::build(y, design, layout, &train)?;
            let mut solver = Solver::new(&prob);
            let mut sse = Vec::with_capacity(path.len());
            for &lambda in path {
                solver.solve(lambda, opts.tol, opts.max_sweeps);
                let coef = solver.original_scale(design, layout);
                sse.push(test.iter().map(|&i| (y[i] - predict(design, layout, &coef, i)).powi(2)).sum());
            }
            Ok(sse)
        })
        .collect::<Result<_>>()?;

    Ok((0..path.len())
        .map(|l| per_fold.iter().map(|f| f[l]).sum::<f64>() / n as f64)
        .collect())
}

/// Lasso fit with `unpenalized` columns (plus the intercept) exempt from the penalty.
pub fn fit_lasso(
    y: &[f64],
    design: &DesignMatrix,
    unpenalized: &[String],
    opts: &LassoOptions,
) -> Result<LassoFit> {
    let n = design.nrows();
    if y.len() != n {
        return Err(Error::Structural(format!("response has {} rows, design {n}", y.len())));
    }
    if n < 2 {
        return Err(Error::Structural("lasso needs at least two observations".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite response".into()));
    }
    if let LambdaChoice::Fixed(l) = opts.lambda {
        if !(l >= 0.0) {
            return Err(Error::Domain(format!("lambda must be >= 0, got {l}")));
        }
    }
    let layout = Layout::new(design, unpenalized)?;
    let rows: Vec<usize> = (0..n).collect();
    let prob = Problem::build(y, design, &layout, &rows)?;
    let dropped: Vec<String> = layout
        .penalized
        .iter()
        .filter(|j| !prob.p_meta.iter().any(|m| m.0 == **j))
        .map(|&j| design.names()[j].clone())
        .collect();
    for name in &dropped {
        log::warn!("lasso: penalized column {name} is constant and was dropped");
    }

    let mut solver = Solver::new(&prob);
    let (lambda, cv_curve, warm_path) = match opts.lambda {
        LambdaChoice::Fixed(l) => (l, Vec::new(), Vec::new()),
        LambdaChoice::CrossValidated { folds, seed } => {
            let path = lambda_path(prob.lambda_max(), opts);
            let errs = cross_validate(y, design, &layout, &path, folds, seed, opts)?;
            let best = errs
                .iter()
                .enumerate()
                .fold(0, |b, (i, e)| if *e < errs[b] { i } else { b });
            let curve = path.iter().copied().zip(errs).collect();
            (path[best], curve, path[..best].to_vec())
        }
    };
    for &l in &warm_path {
        solver.solve(l, opts.tol, opts.max_sweeps);
    }
    let (sweeps, converged) = solver.solve(lambda, opts.tol, opts.max_sweeps);
    if !converged {
        log::warn!("lasso: no convergence after {sweeps} sweeps at lambda {lambda}");
    }
    let coefficients = solver.original_scale(design, &layout);
    let selected = layout
        .penalized
        .iter()
        .filter(|&&j| coefficients[layout.slot(j)] != 0.0)
        .map(|&j| design.names()[j].clone())
        .collect();
    let unpen_names = {
        let mut v = Vec::new();
        if layout.added_intercept {
            v.push(INTERCEPT.to_string());
        }
        v.extend(layout.unpenalized.iter().map(|&j| design.names()[j].clone()));
        v
    };
    Ok(LassoFit {
        names: layout.names,
        coefficients,
        lambda,
        selected,
        unpenalized: unpen_names,
        dropped,
        sweeps,
        converged,
        cv_curve,
    })
}

/// Penalized objective on the original scale, with the penalty applied to the
/// standardized coefficients `|β_j| · sd_j` exactly as the solver does.
pub fn lasso_objective(y: &[f64], design: &DesignMatrix, fit: &LassoFit) -> f64 {
    let n = y.len();
    let layout = Layout::new(design, &fit.unpenalized).expect("fit was produced from this design");
    let rss: f64 = (0..n)
        .map(|i| (y[i] - predict(design, &layout, &fit.coefficients, i)).powi(2))
        .sum();
    let x = design.matrix();
    let penalty: f64 = layout
        .penalized
        .iter()
        .map(|&j| {
            let col = x.column(j);
            let mean = col.mean();
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            fit.coefficients[layout.slot(j)].abs() * sd
        })
        .sum();
    rss / (2.0 * n as f64) + fit.lambda * penalty
}
