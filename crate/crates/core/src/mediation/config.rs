use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::LambdaChoice;

/// How the Lasso selection and the marginal exposure tests are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScreeningRule {
    /// `S = G_Y ∩ (G_M ∪ G_F)`.
    #[default]
    Conjunction,
    /// `S = G_Y ∪ G_M ∪ G_F`.
    Union,
}

/// Outcome model used by the naive per-gene analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaiveOutcome {
    /// `Y ~ X + Z + M_g` and `Y ~ X + Z + F_g` as two separate fits.
    #[default]
    Separate,
    /// `Y ~ X + Z + M_g + F_g` in one fit.
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediationConfig {
    /// Level applied to BH-adjusted JS p-values.
    pub level: f64,
    /// Level for the marginal exposure tests during screening.
    pub screening_level: f64,
    pub screening_rule: ScreeningRule,
    /// Exposure contrast `(x1, x2)` for the indirect effects.
    pub contrast: (f64, f64),
    /// Covariate profile for the indirect effects; sample mean when absent.
    pub covariate_profile: Option<Vec<f64>>,
    /// Fixed λ for the screening Lasso; cross-validated when absent.
    pub lasso_lambda: Option<f64>,
    pub cv_folds: usize,
    /// Seeds the cross-validation fold assignment.
    pub seed: u64,
    pub naive_outcome: NaiveOutcome,
}

impl Default for MediationConfig {
    fn default() -> Self {
        Self {
            level: 0.05,
            screening_level: 0.05,
            screening_rule: ScreeningRule::Conjunction,
            contrast: (0.0, 1.0),
            covariate_profile: None,
            lasso_lambda: None,
            cv_folds: 10,
            seed: 0,
            naive_outcome: NaiveOutcome::Separate,
        }
    }
}

impl MediationConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("level", self.level), ("screening_level", self.screening_level)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(field, format!("{v} is not in (0, 1)")));
            }
        }
        if !self.contrast.0.is_finite() || !self.contrast.1.is_finite() {
            return Err(Error::config("contrast", "must be finite"));
        }
        if let Some(l) = self.lasso_lambda {
            if !(l >= 0.0) {
                return Err(Error::config("lasso_lambda", format!("{l} is negative")));
            }
        }
        if self.cv_folds < 2 {
            return Err(Error::config("cv_folds", "need at least 2 folds"));
        }
        Ok(())
    }

    pub(crate) fn lambda_choice(&self) -> LambdaChoice {
        match self.lasso_lambda {
            Some(l) => LambdaChoice::Fixed(l),
            None => LambdaChoice::CrossValidated {
                folds: self.cv_folds,
                seed: self.seed,
            },
        }
    }
}
