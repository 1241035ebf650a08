//! Link functions and special functions not provided by `statrs`.

pub use statrs::function::gamma::{digamma, ln_gamma};

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Inverse logit, evaluated without overflow for large |x|.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ψ'(x) for x > 0: upward recurrence then the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2 / 2.0
        + inv * inv2
            * (1.0 / 6.0
                + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * 5.0 / 66.0))))
}
