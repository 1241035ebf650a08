use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Two-sided p-value of `estimate / se` against the standard normal.
///
/// Evaluated as `erfc(|z| / √2)`, which equals `2(1 − Φ(|z|))` without the
/// cancellation in the upper tail.
pub fn wald_pvalue(estimate: f64, se: f64) -> Result<f64> {
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::Domain(format!("standard error must be positive, got {se}")));
    }
    if !estimate.is_finite() {
        return Err(Error::Domain(format!("estimate must be finite, got {estimate}")));
    }
    let z = estimate.abs() / se;
    Ok(erfc(z / std::f64::consts::SQRT_2).clamp(0.0, 1.0))
}
