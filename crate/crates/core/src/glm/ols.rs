use nalgebra::DVector;

use super::fit::{wald_pvalues, AuxParameter, RegressionFit};
use super::DesignMatrix;
use crate::error::{Error, Result};

/// Least-squares fit with the usual `σ² (XᵀX)⁻¹` covariance and normal-reference
/// Wald p-values.
pub fn fit_ols(y: &[f64], design: &DesignMatrix) -> Result<RegressionFit> {
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n {
        return Err(Error::Structural(format!("response has {} rows, design {n}", y.len())));
    }
    if n <= p {
        return Err(Error::Structural(format!("need more rows than columns ({n} <= {p})")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite response".into()));
    }
    design.require_full_rank()?;

    let x = design.matrix();
    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let resid = &yv - x * &beta;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - p) as f64;

    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ
    let r_inv = r
        .solve_upper_triangular(&nalgebra::DMatrix::identity(p, p))
        .ok_or_else(|| Error::Numerical("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let standard_errors: Vec<f64> = (0..p).map(|j| (sigma2 * xtx_inv[(j, j)]).max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let p_values = wald_pvalues(&coefficients, &standard_errors);

    let nf = n as f64;
    let log_likelihood = if rss > 0.0 {
        -0.5 * nf * ((2.0 * std::f64::consts::PI * rss / nf).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    Ok(RegressionFit {
        names: design.names().to_vec(),
        coefficients,
        standard_errors,
        p_values,
        aux: AuxParameter::ResidualVariance(sigma2),
        converged: true,
        iterations: 1,
        log_likelihood,
        log_likelihood_trace: Vec::new(),
        near_poisson: false,
    })
}
