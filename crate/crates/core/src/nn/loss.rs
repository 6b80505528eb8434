use ndarray::{Array2, ArrayView2, Axis};

/// Probabilities are clamped to this floor before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|z| (z - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|e| e / sum);
    }
    out
}

/// Mean of `-ln p[true]` over rows, `p` clamped to `[PROB_FLOOR, 1]`.
pub fn cross_entropy_loss(probs: ArrayView2<'_, f64>, labels: &[usize]) -> f64 {
    assert_eq!(probs.nrows(), labels.len(), "one label per probability row");
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = labels.iter().enumerate().map(|(i, &y)| -probs[[i, y]].clamp(PROB_FLOOR, 1.0).ln()).sum();
    total / labels.len() as f64
}
