//! Maximum-likelihood and penalized regression engines used by the mediation
//! pipeline: ordinary least squares, beta regression with logit link,
//! negative-binomial regression with log link, and Lasso by coordinate descent.

mod beta;
mod design;
mod fit;
mod lasso;
mod linalg;
mod nb;
mod ols;
pub mod special;
mod wald;

pub use beta::{beta_log_likelihood, beta_score, fit_beta_regression, BetaOptions};
pub use design::{DesignMatrix, INTERCEPT};
pub use fit::{AuxParameter, RegressionFit};
pub use lasso::{
    fit_lasso, lambda_max, lasso_objective, soft_threshold, LambdaChoice, LassoFit, LassoOptions,
};
pub use nb::{fit_nb_regression, nb_log_likelihood, nb_score, NbOptions, THETA_CAP};
pub use ols::fit_ols;
pub use wald::wald_pvalue;
