//! Beta regression: `logit(μ) = Xβ`, response `y ~ Beta(μφ, (1 − μ)φ)` with a
//! single precision φ shared by all observations.

use nalgebra::{DMatrix, DVector};

use super::fit::{wald_pvalues, AuxParameter, RegressionFit};
use super::linalg::{max_abs, spd_inverse, spd_solve};
use super::special::{digamma, expit, ln_gamma, logit, trigamma};
use super::DesignMatrix;
use crate::error::{Error, Result};

const LOG_PHI_MIN: f64 = -18.0;
const LOG_PHI_MAX: f64 = 27.6; // ~1e12

#[derive(Debug, Clone, Copy)]
pub struct BetaOptions {
    pub max_iter: usize,
    /// Converged once the largest Newton step component drops below this.
    pub step_tol: f64,
}

impl Default for BetaOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            step_tol: 1e-8,
        }
    }
}

fn check_response(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Domain(format!(
            "beta regression response must lie strictly inside (0, 1), got {v}"
        )));
    }
    Ok(())
}

pub fn beta_log_likelihood(y: &[f64], x: &DMatrix<f64>, beta: &[f64], phi: f64) -> f64 {
    let eta = x * DVector::from_column_slice(beta);
    let lg_phi = ln_gamma(phi);
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &e)| {
            let mu = expit(e);
            let a = mu * phi;
            let b = (1.0 - mu) * phi;
            lg_phi - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * yi.ln() + (b - 1.0) * (1.0 - yi).ln()
        })
        .sum()
}

/// Analytic gradient in `(β, φ)`; the last entry is `∂ℓ/∂φ`.
pub fn beta_score(y: &[f64], x: &DMatrix<f64>, beta: &[f64], phi: f64) -> Vec<f64> {
    let d = derivatives(y, x, beta, phi, false);
    d.grad.iter().copied().collect()
}

struct Derivatives {
    ll: f64,
    /// Gradient in (β, φ).
    grad: DVector<f64>,
    /// Observed information −H in (β, φ).
    observed: DMatrix<f64>,
    /// Expected (Fisher) information in (β, φ).
    expected: DMatrix<f64>,
}

fn derivatives(y: &[f64], x: &DMatrix<f64>, beta: &[f64], phi: f64, second: bool) -> Derivatives {
    let n = x.nrows();
    let p = x.ncols();
    let eta = x * DVector::from_column_slice(beta);
    let (lg_phi, dg_phi, tg_phi) = (ln_gamma(phi), digamma(phi), trigamma(phi));

    let mut ll = 0.0;
    let mut grad = DVector::zeros(p + 1);
    let mut observed = DMatrix::zeros(p + 1, p + 1);
    let mut expected = DMatrix::zeros(p + 1, p + 1);
    for i in 0..n {
        let yi = y[i];
        let mu = expit(eta[i]);
        let dmu = mu * (1.0 - mu);
        let a = mu * phi;
        let b = (1.0 - mu) * phi;
        let (ly, l1y) = (yi.ln(), (1.0 - yi).ln());
        ll += lg_phi - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y;

        let (dg_a, dg_b) = (digamma(a), digamma(b));
        let resid = (ly - l1y) - (dg_a - dg_b);
        let d_eta = phi * resid * dmu;
        let d_phi = dg_phi - mu * dg_a - (1.0 - mu) * dg_b + mu * ly + (1.0 - mu) * l1y;
        let row = x.row(i);
        for j in 0..p {
            grad[j] += d_eta * row[j];
        }
        grad[p] += d_phi;

        if !second {
            continue;
        }
        let (tg_a, tg_b) = (trigamma(a), trigamma(b));
        let w_exp = phi * phi * (tg_a + tg_b) * dmu * dmu;
        // −∂²ℓ/∂η² adds the curvature of the link, which vanishes in expectation.
        let w_obs = w_exp - phi * resid * dmu * (1.0 - 2.0 * mu);
        let c_exp = phi * (mu * tg_a - (1.0 - mu) * tg_b) * dmu;
        let c_obs = c_exp - resid * dmu;
        let pp = -tg_phi + mu * mu * tg_a + (1.0 - mu) * (1.0 - mu) * tg_b;
        for j in 0..p {
            for k in j..p {
                let xx = row[j] * row[k];
                observed[(j, k)] += w_obs * xx;
                expected[(j, k)] += w_exp * xx;
            }
            observed[(j, p)] += c_obs * row[j];
            expected[(j, p)] += c_exp * row[j];
        }
        observed[(p, p)] += pp;
        expected[(p, p)] += pp;
    }
    if second {
        for m in [&mut observed, &mut expected] {
            for j in 0..=p {
                for k in 0..j {
                    m[(j, k)] = m[(k, j)];
                }
            }
        }
    }
    Derivatives {
        ll,
        grad,
        observed,
        expected,
    }
}

/// Convert (β, φ) derivatives into the (β, ln φ) coordinates used for Newton steps.
fn to_log_phi(d: &Derivatives, phi: f64, info: &DMatrix<f64>, observed: bool) -> (DVector<f64>, DMatrix<f64>) {
    let p = d.grad.len() - 1;
    let mut g = d.grad.clone();
    g[p] *= phi;
    let mut h = info.clone();
    for j in 0..p {
        h[(j, p)] *= phi;
        h[(p, j)] *= phi;
    }
    h[(p, p)] *= phi * phi;
    if observed {
        // second derivative of the chain rule: −∂²ℓ/∂ρ² = φ² I_φφ − φ ∂ℓ/∂φ
        h[(p, p)] -= phi * d.grad[p];
    }
    (g, h)
}

fn initial_values(y: &[f64], design: &DesignMatrix) -> Result<(Vec<f64>, f64)> {
    let z: Vec<f64> = y.iter().map(|&v| logit(v.clamp(1e-6, 1.0 - 1e-6))).collect();
    let ols = super::fit_ols(&z, design).or_else(|e| match e {
        Error::Structural(_) => Ok(fallback_intercept(&z, design)),
        other => Err(other),
    })?;
    let beta = ols.coefficients;
    let x = design.matrix();
    let eta = x * DVector::from_column_slice(&beta);
    let n = y.len();
    let p = design.ncols();
    let mut ss = 0.0;
    let mut mv = 0.0;
    for i in 0..n {
        let mu = expit(eta[i]);
        ss += (y[i] - mu).powi(2);
        mv += mu * (1.0 - mu);
    }
    let sigma2 = ss / (n.saturating_sub(p).max(1)) as f64;
    let phi = if sigma2 > 0.0 {
        (mv / n as f64 / sigma2 - 1.0).max(0.5)
    } else {
        LOG_PHI_MAX.exp()
    };
    Ok((beta, phi.min(LOG_PHI_MAX.exp())))
}

/// Starting point when OLS is not identifiable (n ≤ p): intercept at the mean.
fn fallback_intercept(z: &[f64], design: &DesignMatrix) -> RegressionFit {
    let p = design.ncols();
    let mut coefficients = vec![0.0; p];
    if let Some(j) = design.column_index(super::INTERCEPT) {
        coefficients[j] = z.iter().sum::<f64>() / z.len() as f64;
    }
    RegressionFit {
        names: design.names().to_vec(),
        coefficients,
        standard_errors: vec![f64::NAN; p],
        p_values: vec![f64::NAN; p],
        aux: AuxParameter::ResidualVariance(f64::NAN),
        converged: false,
        iterations: 0,
        log_likelihood: f64::NAN,
        log_likelihood_trace: Vec::new(),
        near_poisson: false,
    }
}

/// Maximum-likelihood beta regression by damped Newton iterations.
///
/// Uses the observed information when it is positive definite and the Fisher
/// information otherwise; every accepted step does not decrease the
/// log-likelihood (step-halving).
pub fn fit_beta_regression(y: &[f64], design: &DesignMatrix, opts: &BetaOptions) -> Result<RegressionFit> {
    let n = design.nrows();
    let p = design.ncols();
    if y.len() != n {
        return Err(Error::Structural(format!("response has {} rows, design {n}", y.len())));
    }
    check_response(y)?;
    design.require_full_rank()?;
    if n <= p {
        return Err(Error::Structural(format!("need more rows than columns ({n} <= {p})")));
    }
    let x = design.matrix();

    let (mut beta, phi0) = initial_values(y, design)?;
    let mut rho = phi0.ln().clamp(LOG_PHI_MIN, LOG_PHI_MAX);
    let mut d = derivatives(y, x, &beta, rho.exp(), true);
    let mut trace = vec![d.ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let phi = rho.exp();
        let (g, h_obs) = to_log_phi(&d, phi, &d.observed, true);
        let step = match spd_solve(&h_obs, &g) {
            Some(s) => s,
            None => {
                let (_, h_exp) = to_log_phi(&d, phi, &d.expected, false);
                spd_solve(&h_exp, &g).unwrap_or_else(|| g.clone() * 1e-3)
            }
        };
        if max_abs(&step) < opts.step_tol {
            converged = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand_beta: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let cand_rho = (rho + scale * step[p]).clamp(LOG_PHI_MIN, LOG_PHI_MAX);
            let ll = beta_log_likelihood(y, x, &cand_beta, cand_rho.exp());
            if ll.is_finite() && ll >= d.ll {
                accepted = Some((cand_beta, cand_rho, ll));
                break;
            }
            scale *= 0.5;
        }
        let Some((nb, nr, ll)) = accepted else {
            // no ascent along the step: at the optimum up to rounding
            converged = max_abs(&d.grad.map(|v| v.abs() / (1.0 + d.ll.abs()))) < 1e-6;
            break;
        };
        let gain = ll - d.ll;
        let capped = nr >= LOG_PHI_MAX;
        beta = nb;
        rho = nr;
        d = derivatives(y, x, &beta, rho.exp(), true);
        trace.push(d.ll);
        if gain <= 1e-13 * (1.0 + d.ll.abs()) || (capped && gain <= 1e-9 * (1.0 + d.ll.abs())) {
            converged = true;
            break;
        }
    }

    let phi = rho.exp();
    let cov = spd_inverse(&d.observed).or_else(|| spd_inverse(&d.expected));
    let standard_errors: Vec<f64> = match &cov {
        Some(c) => (0..p).map(|j| c[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; p],
    };
    if cov.is_none() {
        converged = false;
    }
    let p_values = wald_pvalues(&beta, &standard_errors);
    Ok(RegressionFit {
        names: design.names().to_vec(),
        coefficients: beta,
        standard_errors,
        p_values,
        aux: AuxParameter::Precision(phi),
        converged,
        iterations,
        log_likelihood: d.ll,
        log_likelihood_trace: trace,
        near_poisson: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_boundary_response() {
        let d = DesignMatrix::intercept_only(3);
        assert!(matches!(
            fit_beta_regression(&[0.2, 1.0, 0.5], &d, &BetaOptions::default()),
            Err(Error::Domain(_))
        ));
        assert!(fit_beta_regression(&[0.0, 0.3, 0.5], &d, &BetaOptions::default()).is_err());
    }

    #[test]
    fn symmetric_response_has_zero_intercept() {
        let d = DesignMatrix::intercept_only(6);
        let fit = fit_beta_regression(&[0.5; 6], &d, &BetaOptions::default()).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-10);
    }

    #[test]
    fn log_likelihood_trace_is_monotone() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| (0.2 + 0.5 * v + 0.1 * ((i * 7 % 5) as f64 - 2.0) / 2.0).clamp(0.05, 0.95))
            .collect();
        let d = DesignMatrix::with_intercept(vec!["x".into()], &[x]).unwrap();
        let fit = fit_beta_regression(&y, &d, &BetaOptions::default()).unwrap();
        assert!(fit.converged);
        for w in fit.log_likelihood_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}
