//! Closed-form interventional indirect effects for a change of exposure from
//! `x1` to `x2`.

use crate::error::{Error, Result};
use crate::glm::special::expit;

fn linear(coef: &[f64], z: &[f64]) -> f64 {
    coef.iter().zip(z).map(|(a, b)| a * b).sum()
}

/// Indirect effect through mean expression:
/// `β_M · exp(γ_Zᵀz) · (exp(γ_X x2) − exp(γ_X x1))`.
///
/// An intercept of the count model can be passed as an extra `gamma_z` entry
/// paired with a `1` in `z`.
pub fn estimate_iie_m(beta_m: f64, gamma_x: f64, gamma_z: &[f64], z: &[f64], x1: f64, x2: f64) -> Result<f64> {
    if gamma_z.len() != z.len() {
        return Err(Error::Structural(format!(
            "{} covariate effects for a profile of length {}",
            gamma_z.len(),
            z.len()
        )));
    }
    if x1 == x2 {
        return Ok(0.0);
    }
    let scale = linear(gamma_z, z).exp();
    let value = beta_m * scale * ((gamma_x * x2).exp() - (gamma_x * x1).exp());
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numerical(format!(
            "IIE through M overflows (γ_Zᵀz = {}, γ_X = {gamma_x})",
            linear(gamma_z, z)
        )))
    }
}

/// Indirect effect through the zero proportion:
/// `β_F · (expit(α_X x2 + α_Zᵀz) − expit(α_X x1 + α_Zᵀz))`.
pub fn estimate_iie_f(beta_f: f64, alpha_x: f64, alpha_z: &[f64], z: &[f64], x1: f64, x2: f64) -> Result<f64> {
    if alpha_z.len() != z.len() {
        return Err(Error::Structural(format!(
            "{} covariate effects for a profile of length {}",
            alpha_z.len(),
            z.len()
        )));
    }
    if x1 == x2 {
        return Ok(0.0);
    }
    let base = linear(alpha_z, z);
    Ok(beta_f * (expit(alpha_x * x2 + base) - expit(alpha_x * x1 + base)))
}
