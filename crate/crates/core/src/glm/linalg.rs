use nalgebra::{DMatrix, DVector};

/// Inverse of a symmetric positive-definite matrix, `None` if Cholesky fails.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = a.clone().cholesky()?.inverse();
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

/// Solve `a x = b` for symmetric positive-definite `a`.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().cholesky()?.solve(b);
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// `Xᵀ diag(w) X`.
pub(crate) fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let p = x.ncols();
    let mut g = DMatrix::zeros(p, p);
    for (i, &wi) in w.iter().enumerate() {
        let row = x.row(i);
        for a in 0..p {
            let ra = row[a] * wi;
            if ra == 0.0 {
                continue;
            }
            for b in a..p {
                g[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    g
}

pub(crate) fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
