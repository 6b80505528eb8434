use ndarray::ArrayView2;
use serde::Serialize;

use super::{MetricsError, Result};

/// One-vs-rest ROC curve for `class`.
///
/// `thresholds[i]` produced `points[i]`: a record counts as positive when its
/// score is `>= threshold`. The first threshold is `+inf`, giving (0, 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub class: usize,
    /// (FPR, TPR), FPR non-decreasing.
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AucScore {
    pub per_class: Vec<f64>,
    pub macro_auc: f64,
    /// AUC of the pooled one-vs-rest decisions over every (record, class) pair.
    pub micro_auc: f64,
}

/// ROC over binary outcomes; equal scores form a single threshold step.
pub(crate) fn roc_binary(scores: &[f64], positive: &[bool], class: usize) -> Result<RocCurve> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 {
        return Err(MetricsError::NoPositives { class });
    }
    if n_neg == 0 {
        return Err(MetricsError::NoNegatives { class });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        thresholds.push(s);
    }
    Ok(RocCurve { class, points, thresholds })
}

/// One-vs-rest ROC curve of `positive_class` from an `n × K` score matrix.
pub fn roc_curve_ovr(scores: ArrayView2<'_, f64>, y_true: &[usize], positive_class: usize) -> Result<RocCurve> {
    if scores.nrows() != y_true.len() || positive_class >= scores.ncols() {
        return Err(MetricsError::ScoreShape {
            rows: scores.nrows(),
            cols: scores.ncols(),
            n: y_true.len(),
            k: positive_class + 1,
        });
    }
    let col: Vec<f64> = scores.column(positive_class).to_vec();
    let positive: Vec<bool> = y_true.iter().map(|&y| y == positive_class).collect();
    roc_binary(&col, &positive, positive_class)
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}
