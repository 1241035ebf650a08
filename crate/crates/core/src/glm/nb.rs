//! Negative-binomial regression, `log(μ) = Xβ`, variance `μ + μ²/θ`.
//!
//! The log-likelihood is written through log-gamma functions, so non-integer
//! responses (averages of counts) are accepted as a continuous extension.

use nalgebra::{DMatrix, DVector};

use super::fit::{wald_pvalues, AuxParameter, RegressionFit};
use super::linalg::{max_abs, spd_inverse, spd_solve, weighted_gram};
use super::special::{digamma, ln_gamma, trigamma};
use super::DesignMatrix;
use crate::error::{Error, Result};

/// Dispersion beyond which the fit is reported as effectively Poisson.
pub const THETA_CAP: f64 = 1e6;
const THETA_FLOOR: f64 = 1e-8;
const ETA_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy)]
pub struct NbOptions {
    /// Outer alternations between β and θ.
    pub max_iter: usize,
    pub tol: f64,
    pub theta_cap: f64,
}

impl Default for NbOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-9,
            theta_cap: THETA_CAP,
        }
    }
}

fn mean_vector(x: &DMatrix<f64>, beta: &[f64]) -> Vec<f64> {
    (x * DVector::from_column_slice(beta))
        .iter()
        .map(|e| e.min(ETA_MAX).exp())
        .collect()
}

fn ll_at(y: &[f64], mu: &[f64], theta: f64) -> f64 {
    let lg_theta = ln_gamma(theta);
    let ln_theta = theta.ln();
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| {
            let lt = (theta + m).ln();
            let count_part = if yi > 0.0 { yi * (m.ln() - lt) } else { 0.0 };
            ln_gamma(yi + theta) - lg_theta - ln_gamma(yi + 1.0) + theta * (ln_theta - lt) + count_part
        })
        .sum()
}

pub fn nb_log_likelihood(y: &[f64], x: &DMatrix<f64>, beta: &[f64], theta: f64) -> f64 {
    ll_at(y, &mean_vector(x, beta), theta)
}

/// Analytic gradient in `(β, θ)`; the last entry is `∂ℓ/∂θ`.
pub fn nb_score(y: &[f64], x: &DMatrix<f64>, beta: &[f64], theta: f64) -> Vec<f64> {
    let mu = mean_vector(x, beta);
    let mut g = beta_gradient(y, x, &mu, theta);
    g.push(theta_score(y, &mu, theta));
    g
}

fn beta_gradient(y: &[f64], x: &DMatrix<f64>, mu: &[f64], theta: f64) -> Vec<f64> {
    let p = x.ncols();
    let mut g = vec![0.0; p];
    for i in 0..y.len() {
        let w = (y[i] - mu[i]) * theta / (theta + mu[i]);
        for (j, gj) in g.iter_mut().enumerate() {
            *gj += w * x[(i, j)];
        }
    }
    g
}

/// Observed information of β at fixed θ: `Σ μθ(y + θ)/(θ + μ)² x xᵀ`.
fn beta_information(y: &[f64], x: &DMatrix<f64>, mu: &[f64], theta: f64) -> DMatrix<f64> {
    let w: Vec<f64> = y
        .iter()
        .zip(mu)
        .map(|(&yi, &m)| m * theta * (yi + theta) / (theta + m).powi(2))
        .collect();
    weighted_gram(x, &w)
}

fn theta_score(y: &[f64], mu: &[f64], theta: f64) -> f64 {
    let base = -digamma(theta) + theta.ln() + 1.0;
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| digamma(yi + theta) + base - (theta + m).ln() - (yi + theta) / (theta + m))
        .sum()
}

fn theta_hessian(y: &[f64], mu: &[f64], theta: f64) -> f64 {
    let base = -trigamma(theta) + 1.0 / theta;
    y.iter()
        .zip(mu)
        .map(|(&yi, &m)| trigamma(yi + theta) + base - 2.0 / (theta + m) + (yi + theta) / (theta + m).powi(2))
        .sum()
}

/// Maximize the profile log-likelihood in θ for fixed means.
///
/// Safeguarded Newton on `ln θ` inside a bracket where the score changes sign;
/// returns the cap when the score is still positive there.
fn update_theta(y: &[f64], mu: &[f64], theta: f64, cap: f64) -> f64 {
    let score = |t: f64| theta_score(y, mu, t);
    if score(cap) > 0.0 {
        return cap;
    }
    let mut lo = theta.clamp(THETA_FLOOR, cap);
    let mut hi = lo;
    if score(lo) > 0.0 {
        while score(hi) > 0.0 {
            lo = hi;
            hi = (hi * 10.0).min(cap);
        }
    } else {
        while lo > THETA_FLOOR && score(lo) <= 0.0 {
            hi = lo;
            lo = (lo / 10.0).max(THETA_FLOOR);
        }
        if score(lo) <= 0.0 {
            return THETA_FLOOR;
        }
    }
    // score(lo) > 0 >= score(hi)
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let mut r = 0.5 * (a + b);
    for _ in 0..200 {
        let t = r.exp();
        let s = score(t);
        if s > 0.0 {
            a = r;
        } else {
            b = r;
        }
        // d score / d ln θ = θ · ∂²ℓ/∂θ²
        let slope = t * theta_hessian(y, mu, t);
        let newton = r - s / slope;
        r = if slope < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (b - a).abs() < 1e-12 || (s / slope).abs() < 1e-12 {
            break;
        }
    }
    r.exp().clamp(THETA_FLOOR, cap)
}

/// Newton (IRLS with observed weights) for β at fixed θ; pushes each accepted
/// log-likelihood onto `trace`.
fn update_beta(
    y: &[f64],
    x: &DMatrix<f64>,
    beta: &mut Vec<f64>,
    theta: f64,
    trace: &mut Vec<f64>,
) -> bool {
    let mut mu = mean_vector(x, beta);
    let mut ll = ll_at(y, &mu, theta);
    for _ in 0..50 {
        let g = DVector::from_vec(beta_gradient(y, x, &mu, theta));
        let info = beta_information(y, x, &mu, theta);
        let Some(step) = spd_solve(&info, &g) else {
            return false;
        };
        if max_abs(&step) < 1e-10 {
            return true;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let cand_mu = mean_vector(x, &cand);
            let cand_ll = ll_at(y, &cand_mu, theta);
            if cand_ll.is_finite() && cand_ll >= ll {
                *beta = cand;
                mu = cand_mu;
                let gain = cand_ll - ll;
                ll = cand_ll;
                trace.push(ll);
                accepted = true;
                if gain <= 1e-14 * (1.0 + ll.abs()) {
                    return true;
                }
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return true;
        }
    }
    true
}

/// Starting β from one Poisson working-response least-squares step.
fn initial_beta(y: &[f64], x: &DMatrix<f64>) -> Option<Vec<f64>> {
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let mu0: Vec<f64> = y.iter().map(|&v| v + 0.1 * ybar).collect();
    let z: Vec<f64> = y.iter().zip(&mu0).map(|(&v, &m)| m.ln() + (v - m) / m).collect();
    let info = weighted_gram(x, &mu0);
    let mut rhs = DVector::zeros(x.ncols());
    for i in 0..y.len() {
        for j in 0..x.ncols() {
            rhs[j] += mu0[i] * z[i] * x[(i, j)];
        }
    }
    spd_solve(&info, &rhs).map(|b| b.iter().copied().collect())
}

/// Moment estimate of θ from fitted means; the cap when there is no overdispersion.
fn initial_theta(y: &[f64], mu: &[f64], cap: f64) -> f64 {
    let num: f64 = mu.iter().map(|m| m * m).sum();
    let den: f64 = y.iter().zip(mu).map(|(&v, &m)| (v - m).powi(2) - m).sum();
    if den > 0.0 {
        (num / den).clamp(1e-4, cap)
    } else {
        cap
    }
}

/// Negative-binomial MLE by alternating Newton updates of β (θ fixed) and
/// one-dimensional profile maximization of θ (β fixed).
pub fn fit_nb_regression(y: &[f64], design: &DesignMatrix, opts: &NbOptions) -> Result<RegressionFit> {
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n {
        return Err(Error::Structural(format!("response has {} rows, design {n}", y.len())));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Domain(format!("negative-binomial response must be >= 0, got {v}")));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateResponse("all responses are zero".into()));
    }
    design.require_full_rank()?;
    if n <= p {
        return Err(Error::Structural(format!("need more rows than columns ({n} <= {p})")));
    }
    let x = design.matrix();

    let mut beta = initial_beta(y, x).ok_or_else(|| Error::Numerical("initial IRLS step failed".into()))?;
    let mut theta = initial_theta(y, &mean_vector(x, &beta), opts.theta_cap);
    let mut trace = vec![ll_at(y, &mean_vector(x, &beta), theta)];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let before = beta.clone();
        let ll_before = *trace.last().unwrap();
        if !update_beta(y, x, &mut beta, theta, &mut trace) {
            break;
        }
        let mu = mean_vector(x, &beta);
        let new_theta = update_theta(y, &mu, theta, opts.theta_cap);
        let ll_old = ll_at(y, &mu, theta);
        let ll_new = ll_at(y, &mu, new_theta);
        let theta_change = if ll_new >= ll_old {
            let c = (new_theta - theta).abs() / theta;
            theta = new_theta;
            trace.push(ll_new);
            c
        } else {
            0.0
        };
        let ll = *trace.last().unwrap();
        let beta_change = before.iter().zip(&beta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if beta_change < 1e-8 && theta_change < 1e-8 && (ll - ll_before).abs() <= opts.tol * (1.0 + ll.abs()) {
            converged = true;
            break;
        }
    }

    let mu = mean_vector(x, &beta);
    let cov = spd_inverse(&beta_information(y, x, &mu, theta));
    let standard_errors: Vec<f64> = match &cov {
        Some(c) => (0..p).map(|j| c[(j, j)].max(0.0).sqrt()).collect(),
        None => {
            converged = false;
            vec![f64::NAN; p]
        }
    };
    let p_values = wald_pvalues(&beta, &standard_errors);
    Ok(RegressionFit {
        names: design.names().to_vec(),
        coefficients: beta,
        standard_errors,
        p_values,
        aux: AuxParameter::Dispersion(theta),
        converged,
        iterations,
        log_likelihood: ll_at(y, &mu, theta),
        log_likelihood_trace: trace,
        near_poisson: theta >= opts.theta_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_response_recovers_log_mean() {
        let d = DesignMatrix::intercept_only(8);
        let fit = fit_nb_regression(&[3.5; 8], &d, &NbOptions::default()).unwrap();
        assert!((fit.coefficients[0] - 3.5f64.ln()).abs() < 1e-8);
        assert!(fit.near_poisson);
        assert!(fit.converged);
    }

    #[test]
    fn degenerate_and_invalid_responses() {
        let d = DesignMatrix::intercept_only(3);
        assert!(matches!(
            fit_nb_regression(&[0.0; 3], &d, &NbOptions::default()),
            Err(Error::DegenerateResponse(_))
        ));
        assert!(matches!(
            fit_nb_regression(&[1.0, -1.0, 2.0], &d, &NbOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn trace_is_monotone_on_overdispersed_data() {
        let x: Vec<f64> = (0..60).map(|i| (i % 6) as f64 / 3.0).collect();
        let y: Vec<f64> = (0..60)
            .map(|i| [0.0, 1.0, 7.0, 2.0, 0.0, 15.0, 3.0, 0.5][i % 8] * (1.0 + x[i]))
            .collect();
        let d = DesignMatrix::with_intercept(vec!["x".into()], &[x]).unwrap();
        let fit = fit_nb_regression(&y, &d, &NbOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(!fit.near_poisson);
        for w in fit.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0], "{} < {}", w[1], w[0]);
        }
        // stationarity
        let g = nb_score(&y, d.matrix(), &fit.coefficients, fit.aux.value());
        assert!(g.iter().all(|v| v.abs() < 1e-5), "{g:?}");
    }
}
