//! Joint-significance and multiplicity adjustment.

/// Joint-significance test of a two-leg pathway: the larger of the two p-values.
pub fn js_test(p_a: f64, p_b: f64) -> f64 {
    p_a.max(p_b)
}

/// Benjamini–Hochberg step-up adjusted p-values, returned in input order.
///
/// Inputs are expected in `[0, 1]`.
pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p[i] * (m as f64 / (rank + 1) as f64));
        adjusted[i] = running.min(1.0);
    }
    adjusted
}
