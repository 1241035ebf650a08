use serde::{Deserialize, Serialize};

/// Family-specific nuisance parameter of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AuxParameter {
    /// Beta-regression precision φ.
    Precision(f64),
    /// Negative-binomial dispersion θ (variance μ + μ²/θ).
    Dispersion(f64),
    /// Linear-model residual variance.
    ResidualVariance(f64),
}

impl AuxParameter {
    pub fn value(&self) -> f64 {
        match *self {
            AuxParameter::Precision(v)
            | AuxParameter::Dispersion(v)
            | AuxParameter::ResidualVariance(v) => v,
        }
    }
}

/// Estimates, standard errors and Wald p-values of an unpenalized fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    pub aux: AuxParameter,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood after each accepted iteration (empty for closed-form fits).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_likelihood_trace: Vec<f64>,
    /// NB only: θ hit the cap and the model is effectively Poisson.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub near_poisson: bool,
}

impl RegressionFit {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn standard_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.standard_errors[i])
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.p_values[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

/// Wald p-values for a coefficient vector; a zero standard error (exact fit)
/// maps to 0 for a nonzero estimate and 1 for a zero estimate.
pub(crate) fn wald_pvalues(coefficients: &[f64], standard_errors: &[f64]) -> Vec<f64> {
    coefficients
        .iter()
        .zip(standard_errors)
        .map(|(&b, &se)| {
            if se > 0.0 && se.is_finite() {
                super::wald_pvalue(b, se).unwrap_or(f64::NAN)
            } else if se == 0.0 {
                if b == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                f64::NAN
            }
        })
        .collect()
}
