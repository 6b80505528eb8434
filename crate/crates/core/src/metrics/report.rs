use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use ndarray::ArrayView2;
use serde::Serialize;

use super::roc::roc_binary;
use super::{
    accuracy, auc, cohen_kappa, confusion_matrix, precision_recall_f1, roc_curve_ovr, AucScore, Averaging,
    ConfusionMatrix, MetricsError, Result, RocCurve,
};
use crate::nn::cross_entropy_loss;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReportOptions {
    pub averaging: Averaging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub kappa: f64,
    pub support: Vec<u64>,
    /// Mean categorical cross-entropy of the scored probabilities.
    pub loss: f64,
    pub averaging: Averaging,
    /// Aggregate precision / recall / F1 under `averaging`.
    pub avg_precision: f64,
    pub avg_recall: f64,
    pub avg_f1: f64,
    /// Some per-class ratio was undefined and reported as 0.
    pub undefined_ratios: bool,
}

/// Everything reported for one model on one labeled set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    pub confusion: ConfusionMatrix,
    pub report: ClassificationReport,
    pub roc: Vec<RocCurve>,
    pub auc: AucScore,
    /// Accuracy on the training part, when the caller evaluated it.
    pub training_accuracy: Option<f64>,
}

impl EvaluationReport {
    /// AUC under the report's averaging mode.
    pub fn roc_auc(&self) -> f64 {
        match self.report.averaging {
            Averaging::Macro => self.auc.macro_auc,
            Averaging::Micro => self.auc.micro_auc,
        }
    }
}

/// Assembles the full metric suite from predicted probabilities and labels.
pub fn full_report(
    probs: ArrayView2<'_, f64>,
    predicted: &[usize],
    y_true: &[usize],
    class_names: &[String],
    options: ReportOptions,
) -> Result<EvaluationReport> {
    let k = class_names.len();
    if probs.nrows() != y_true.len() || probs.ncols() != k {
        return Err(MetricsError::ScoreShape { rows: probs.nrows(), cols: probs.ncols(), n: y_true.len(), k });
    }
    let cm = confusion_matrix(y_true, predicted, k)?;
    let acc = accuracy(&cm)?;
    let scores = precision_recall_f1(&cm);
    let kappa = cohen_kappa(&cm)?;

    let roc = (0..k).map(|c| roc_curve_ovr(probs, y_true, c)).collect::<Result<Vec<_>>>()?;
    let per_class: Vec<f64> = roc.iter().map(auc).collect();
    let macro_auc = per_class.iter().sum::<f64>() / k as f64;
    let flat_scores: Vec<f64> = probs.iter().copied().collect();
    let flat_pos: Vec<bool> = y_true.iter().flat_map(|&y| (0..k).map(move |c| c == y)).collect();
    let micro_auc = auc(&roc_binary(&flat_scores, &flat_pos, 0)?);

    let (avg_precision, avg_recall, avg_f1) = match options.averaging {
        Averaging::Macro => (scores.macro_precision, scores.macro_recall, scores.macro_f1),
        // single-label multi-class: pooled TP / FP / FN all reduce to accuracy
        Averaging::Micro => (acc, acc, acc),
    };
    let support = (0..k).map(|c| cm.row_sum(c)).collect();
    let report = ClassificationReport {
        accuracy: acc,
        macro_precision: scores.macro_precision,
        macro_recall: scores.macro_recall,
        macro_f1: scores.macro_f1,
        precision: scores.precision,
        recall: scores.recall,
        f1: scores.f1,
        kappa,
        support,
        loss: cross_entropy_loss(probs, y_true),
        averaging: options.averaging,
        avg_precision,
        avg_recall,
        avg_f1,
        undefined_ratios: scores.undefined,
    };
    Ok(EvaluationReport {
        class_names: class_names.to_vec(),
        confusion: cm,
        report,
        roc,
        auc: AucScore { per_class, macro_auc, micro_auc },
        training_accuracy: None,
    })
}

/// Named metric rows in the layout of the DNN-vs-ODNN comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub rows: Vec<(String, f64)>,
}

impl MetricTable {
    pub fn from_report(r: &EvaluationReport) -> Self {
        let mut rows = Vec::new();
        if let Some(t) = r.training_accuracy {
            rows.push(("Training Accuracy".to_string(), t));
        }
        rows.push(("Testing Accuracy".to_string(), r.report.accuracy));
        for (i, (name, p)) in r.class_names.iter().zip(&r.report.precision).enumerate() {
            rows.push((format!("Precision (Class {i}: {name})"), *p));
        }
        rows.push(("Recall (All Classes)".to_string(), r.report.avg_recall));
        rows.push(("F1-Score (All Classes)".to_string(), r.report.avg_f1));
        rows.push(("Kappa Score".to_string(), r.report.kappa));
        rows.push(("ROC-AUC".to_string(), r.roc_auc()));
        rows.push(("Loss".to_string(), r.report.loss));
        Self { rows }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (name, v) in &self.rows {
            let _ = writeln!(s, "{},{v}", csv_field(name));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| MetricsError::Table(e.to_string()))?;
        if headers.iter().collect::<Vec<_>>() != ["metric", "value"] {
            return Err(MetricsError::Table("expected header 'metric,value'".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| MetricsError::Table(e.to_string()))?;
            let v: f64 = rec[1]
                .parse()
                .map_err(|_| MetricsError::Table(format!("bad value '{}' for '{}'", &rec[1], &rec[0])))?;
            rows.push((rec[0].to_string(), v));
        }
        Ok(Self { rows })
    }

    /// Side-by-side CSV with `self` as the baseline column. Rows follow the
    /// baseline order; rows missing on either side are left blank.
    pub fn comparison_csv(&self, optimized: &MetricTable) -> String {
        let mut s = String::from("metric,DNN,ODNN with HHO\n");
        for name in self.merged_names(optimized) {
            let fmt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{}", csv_field(&name), fmt(self.get(&name)), fmt(optimized.get(&name)));
        }
        s
    }

    /// Fixed-width text rendering of [`Self::comparison_csv`].
    pub fn comparison_text(&self, optimized: &MetricTable) -> String {
        let names = self.merged_names(optimized);
        let width = names.iter().map(|n| n.len()).max().unwrap_or(6).max(6);
        let mut s = format!("{:<width$}  {:>10}  {:>14}\n", "Metric", "DNN", "ODNN with HHO");
        for name in names {
            let fmt = |v: Option<f64>| match v {
                Some(v) if name == "Loss" || name == "ROC-AUC" => format!("{v:.4}"),
                Some(v) => format!("{:.2}%", v * 100.0),
                None => "-".to_string(),
            };
            let _ = writeln!(s, "{name:<width$}  {:>10}  {:>14}", fmt(self.get(&name)), fmt(optimized.get(&name)));
        }
        s
    }

    fn merged_names(&self, other: &MetricTable) -> Vec<String> {
        let mut names: Vec<String> = self.rows.iter().map(|(n, _)| n.clone()).collect();
        for (n, _) in &other.rows {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        names
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn confusion_csv(r: &EvaluationReport) -> String {
    let mut s = String::from("true\\pred");
    for n in &r.class_names {
        let _ = write!(s, ",{}", csv_field(n));
    }
    s.push('\n');
    for (name, row) in r.class_names.iter().zip(r.confusion.counts().outer_iter()) {
        s.push_str(&csv_field(name));
        for c in row {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

pub fn roc_csv(r: &EvaluationReport) -> String {
    let mut s = String::from("class,threshold,fpr,tpr\n");
    for curve in &r.roc {
        for (&t, &(fpr, tpr)) in curve.thresholds.iter().zip(&curve.points) {
            let t = if t.is_infinite() { "inf".to_string() } else { t.to_string() };
            let _ = writeln!(s, "{},{t},{fpr},{tpr}", curve.class);
        }
    }
    s
}

pub fn summary_text(r: &EvaluationReport) -> String {
    let rep = &r.report;
    let mut s = String::new();
    let _ = writeln!(s, "records: {}", r.confusion.total());
    if let Some(t) = r.training_accuracy {
        let _ = writeln!(s, "training accuracy: {t:.6}");
    }
    let _ = writeln!(s, "accuracy: {:.6}", rep.accuracy);
    let _ = writeln!(s, "loss: {:.6}", rep.loss);
    let _ = writeln!(s, "kappa: {:.6}", rep.kappa);
    let avg = match rep.averaging {
        Averaging::Macro => "macro",
        Averaging::Micro => "micro",
    };
    let _ =
        writeln!(s, "{avg} precision/recall/f1: {:.6} / {:.6} / {:.6}", rep.avg_precision, rep.avg_recall, rep.avg_f1);
    let _ = writeln!(s, "roc-auc ({avg}): {:.6}", r.roc_auc());
    let _ = writeln!(s, "{:<8} {:>9} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "auc", "support");
    for (c, name) in r.class_names.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:<8} {:>9.6} {:>9.6} {:>9.6} {:>9.6} {:>8}",
            name, rep.precision[c], rep.recall[c], rep.f1[c], r.auc.per_class[c], rep.support[c]
        );
    }
    if rep.undefined_ratios {
        s.push_str("warning: some per-class ratios had zero denominators and are reported as 0\n");
    }
    s.push_str("confusion (rows = true, columns = predicted):\n");
    for row in r.confusion.counts().outer_iter() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>6}")).collect();
        let _ = writeln!(s, "{}", cells.join(" "));
    }
    s
}

/// Heat grid of the confusion matrix, row-normalized shading.
pub fn confusion_svg(r: &EvaluationReport) -> String {
    let k = r.class_names.len();
    let cell = 60;
    let margin = 80;
    let size = margin + cell * k + 10;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    for (i, name) in r.class_names.iter().enumerate() {
        let pos = margin + cell * i + cell / 2;
        let _ =
            writeln!(s, "<text x=\"{pos}\" y=\"{}\" text-anchor=\"middle\">{}</text>", margin - 8, xml_escape(name));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{pos}\" text-anchor=\"end\">{}</text>", margin - 8, xml_escape(name));
    }
    for (i, row) in r.confusion.counts().outer_iter().enumerate() {
        let total = row.sum().max(1) as f64;
        for (j, &c) in row.iter().enumerate() {
            let shade = 255 - (c as f64 / total * 200.0).round() as u8;
            let (x, y) = (margin + cell * j, margin + cell * i);
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell}\" height=\"{cell}\" fill=\"rgb({shade},{shade},255)\" stroke=\"#444\"/>"
            );
            let _ = writeln!(
                s,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{c}</text>",
                x + cell / 2,
                y + cell / 2 + 4
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `metrics.csv`, `confusion.csv`, `roc.csv`, `report.txt` and
/// `confusion.svg` into `dir`.
pub fn write_report_files(r: &EvaluationReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), MetricTable::from_report(r).to_csv())?;
    fs::write(dir.join("confusion.csv"), confusion_csv(r))?;
    fs::write(dir.join("roc.csv"), roc_csv(r))?;
    fs::write(dir.join("report.txt"), summary_text(r))?;
    fs::write(dir.join("confusion.svg"), confusion_svg(r))?;
    Ok(())
}
