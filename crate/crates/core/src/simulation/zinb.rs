use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Draws from a zero-inflated negative binomial: a structural zero with
/// probability `pi`, otherwise NB with mean `mu` and dispersion `delta`
/// (variance `mu + mu²/delta`), sampled as a gamma-Poisson mixture.
pub fn sample_zinb<R: Rng + ?Sized>(mu: f64, delta: f64, pi: f64, count: usize, rng: &mut R) -> Result<Vec<u64>> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Domain(format!("ZINB mean must be positive and finite, got {mu}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("ZINB dispersion must be positive and finite, got {delta}")));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::Domain(format!("zero-inflation probability {pi} outside [0, 1]")));
    }
    if count == 0 {
        return Err(Error::Domain("ZINB draw count must be >= 1".into()));
    }
    let gamma = Gamma::new(delta, mu / delta).map_err(|e| Error::Domain(e.to_string()))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if pi > 0.0 && rng.random::<f64>() < pi {
            out.push(0);
            continue;
        }
        let rate: f64 = gamma.sample(rng);
        let draw = if rate > 0.0 && rate.is_finite() {
            Poisson::new(rate).map(|p| p.sample(rng)).unwrap_or(0.0)
        } else {
            0.0
        };
        out.push(draw as u64);
    }
    Ok(out)
}
