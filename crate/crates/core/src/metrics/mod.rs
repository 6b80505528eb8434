//! Multi-class evaluation metrics.
//!
//! Conventions: confusion matrices are indexed `[true][predicted]`; per-class
//! scores read the matrix one-vs-rest (class `c` positive, all others
//! negative); aggregates are unweighted means over classes unless
//! [`Averaging::Micro`] is requested. A ratio whose denominator is zero is
//! reported as 0 and flags the result as containing undefined values.

mod report;
mod roc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{
    confusion_csv, confusion_svg, full_report, roc_csv, summary_text, write_report_files, ClassificationReport,
    EvaluationReport, MetricTable, ReportOptions,
};
pub use roc::{auc, roc_curve_ovr, AucScore, RocCurve};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {y_true} true labels vs {y_pred} predictions")]
    LengthMismatch { y_true: usize, y_pred: usize },
    #[error("label {label} at position {index} is outside 0..{classes}")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("class {class} has no positive examples")]
    NoPositives { class: usize },
    #[error("class {class} has no negative examples")]
    NoNegatives { class: usize },
    #[error("score matrix has {rows}×{cols} entries, expected {n}×{k}")]
    ScoreShape { rows: usize, cols: usize, n: usize, k: usize },
    #[error("malformed metric table: {0}")]
    Table(String),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    #[default]
    Macro,
    Micro,
}

impl std::str::FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "macro" => Ok(Self::Macro),
            "micro" => Ok(Self::Micro),
            other => Err(format!("unknown averaging '{other}' (expected macro or micro)")),
        }
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Array2<u64>) -> Self {
        assert_eq!(counts.nrows(), counts.ncols(), "confusion matrix must be square");
        Self { counts }
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }

    pub fn trace(&self) -> u64 {
        self.counts.diag().sum()
    }

    /// Records whose true class is `c` (support).
    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts.row(c).sum()
    }

    /// Records predicted as `c`.
    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.column(c).sum()
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch { y_true: y_true.len(), y_pred: y_pred.len() });
    }
    let mut counts = Array2::<u64>::zeros((k, k));
    for (index, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        for label in [t, p] {
            if label >= k {
                return Err(MetricsError::LabelOutOfRange { index, label, classes: k });
            }
        }
        counts[[t, p]] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Trace over total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(cm.trace() as f64 / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Some per-class ratio had a zero denominator and was reported as 0.
    pub undefined: bool,
}

fn ratio(num: f64, den: f64, undefined: &mut bool) -> f64 {
    if den == 0.0 {
        *undefined = true;
        0.0
    } else {
        num / den
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> ClassScores {
    let k = cm.n_classes();
    let mut undefined = false;
    let mut precision = Vec::with_capacity(k);
    let mut recall = Vec::with_capacity(k);
    let mut f1 = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.counts[[c, c]] as f64;
        let p = ratio(tp, cm.col_sum(c) as f64, &mut undefined);
        let r = ratio(tp, cm.row_sum(c) as f64, &mut undefined);
        let f = ratio(2.0 * p * r, p + r, &mut undefined);
        precision.push(p);
        recall.push(r);
        f1.push(f);
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    ClassScores {
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        precision,
        recall,
        f1,
        undefined,
    }
}

/// Cohen's kappa, `(p_o - p_e) / (1 - p_e)`.
///
/// `p_e = 1` only happens when every record sits in one cell, which is perfect
/// agreement; that case returns 1.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let n = total as f64;
    let p_o = cm.trace() as f64 / n;
    let p_e = (0..cm.n_classes()).map(|c| cm.row_sum(c) as f64 * cm.col_sum(c) as f64).sum::<f64>() / (n * n);
    if p_e == 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn perfect_balanced() {
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let cm = confusion_matrix(&y, &y, 3).unwrap();
        assert_eq!(cm.counts(), &array![[10, 0, 0], [0, 10, 0], [0, 0, 10]]);
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        let s = precision_recall_f1(&cm);
        assert!(s.precision.iter().chain(&s.recall).chain(&s.f1).all(|&v| v == 1.0));
        assert_eq!(cohen_kappa(&cm).unwrap(), 1.0);
    }

    #[test]
    fn hand_counted_binary() {
        let cm = confusion_matrix(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(cm.counts(), &array![[1, 1], [0, 2]]);
        assert_eq!(accuracy(&cm).unwrap(), 0.75);
    }

    #[test]
    fn absent_class_row_is_zero() {
        let cm = confusion_matrix(&[0, 1, 1], &[0, 1, 0], 3).unwrap();
        assert!(cm.counts().row(2).iter().all(|&c| c == 0));
        let s = precision_recall_f1(&cm);
        assert_eq!((s.precision[2], s.recall[2], s.f1[2]), (0.0, 0.0, 0.0));
        assert!(s.undefined);
    }

    #[test]
    fn uniform_ones_accuracy() {
        let cm = ConfusionMatrix::from_counts(Array2::ones((3, 3)));
        assert!((accuracy(&cm).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn scores_20_5_10_15() {
        let cm = ConfusionMatrix::from_counts(array![[20, 5], [10, 15]]);
        let s = precision_recall_f1(&cm);
        assert!((s.precision[0] - 20.0 / 30.0).abs() < 1e-12);
        assert!((s.recall[0] - 0.8).abs() < 1e-12);
        let p = 2.0 / 3.0;
        assert!((s.f1[0] - 2.0 * p * 0.8 / (p + 0.8)).abs() < 1e-12);
        assert!((s.f1[0] - 0.7273).abs() < 5e-5);
        assert!(!s.undefined);
        assert!((cohen_kappa(&cm).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kappa_single_cell() {
        let cm = ConfusionMatrix::from_counts(array![[5, 0], [0, 0]]);
        assert_eq!(cohen_kappa(&cm).unwrap(), 1.0);
    }

    #[test]
    fn kappa_near_zero_for_independent_labels() {
        let mut rng = crate::rng::seeded(17);
        let t: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..3)).collect();
        let p: Vec<usize> = (0..10_000).map(|_| rng.random_range(0..3)).collect();
        let k = cohen_kappa(&confusion_matrix(&t, &p, 3).unwrap()).unwrap();
        assert!(k.abs() < 0.05, "kappa {k}");
    }

    #[test]
    fn errors() {
        assert_eq!(
            confusion_matrix(&[0], &[0, 1], 2).unwrap_err(),
            MetricsError::LengthMismatch { y_true: 1, y_pred: 2 }
        );
        assert!(matches!(
            confusion_matrix(&[0, 2], &[0, 1], 2),
            Err(MetricsError::LabelOutOfRange { index: 1, label: 2, .. })
        ));
        let empty = confusion_matrix(&[], &[], 2).unwrap();
        assert_eq!(accuracy(&empty), Err(MetricsError::Empty));
        assert_eq!(cohen_kappa(&empty), Err(MetricsError::Empty));
    }
}
