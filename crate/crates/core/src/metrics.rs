//! Confusion matrices and the per-class and overall scores derived from them.
//!
//! Rows are actual classes, columns predicted classes. Per-class scores come
//! from one-vs-rest counts. The G-mean is the geometric mean `sqrt(P * R)`;
//! "overall" scores are unweighted means across classes.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{actual} actual labels but {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("class index {index} out of range for {n} classes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("confusion matrix is empty")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
    class_names: Vec<String>,
}

impl ConfusionMatrix {
    /// Wraps a square count matrix whose side matches `class_names`.
    pub fn from_counts(
        counts: Vec<Vec<u64>>,
        class_names: Vec<String>,
    ) -> Result<Self, MetricsError> {
        let n = class_names.len();
        if counts.len() != n || counts.iter().any(|row| row.len() != n) {
            return Err(MetricsError::Invalid(format!(
                "confusion matrix must be {n}x{n}"
            )));
        }
        Ok(Self {
            counts,
            class_names,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn build_confusion(
    y_true: &[usize],
    y_pred: &[usize],
    class_names: &[String],
) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            actual: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let n = class_names.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (&a, &p) in y_true.iter().zip(y_pred) {
        if let Some(&index) = [a, p].iter().find(|&&i| i >= n) {
            return Err(MetricsError::IndexOutOfRange { index, n });
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix {
        counts,
        class_names: class_names.to_vec(),
    })
}

/// Divides each row by its sum; all-zero rows stay zero.
pub fn row_normalize(c: &ConfusionMatrix) -> Vec<Vec<f64>> {
    c.counts
        .iter()
        .map(|row| {
            let sum: u64 = row.iter().sum();
            row.iter()
                .map(|&v| if sum == 0 { 0.0 } else { v as f64 / sum as f64 })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneVsRestCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl OneVsRestCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Binary accuracy `(TP + TN) / total`, `None` when there are no samples.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| (self.tp + self.tn) as f64 / total as f64)
    }
}

pub fn one_vs_rest(c: &ConfusionMatrix, class: usize) -> Result<OneVsRestCounts, MetricsError> {
    let n = c.n_classes();
    if class >= n {
        return Err(MetricsError::IndexOutOfRange { index: class, n });
    }
    let tp = c.counts[class][class];
    let fp = c.col_sum(class) - tp;
    let fn_ = c.row_sum(class) - tp;
    let tn = c.total() - tp - fp - fn_;
    Ok(OneVsRestCounts { tp, fp, fn_, tn })
}

/// Per-class scores. A zero denominator yields 0 with its `*_defined` flag
/// cleared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub g_mean: f64,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub f_measure_defined: bool,
}

impl ClassMetrics {
    /// Scores from a precision/recall pair taken as defined.
    pub fn from_precision_recall(precision: f64, recall: f64) -> Self {
        Self::combine(precision, recall, true, true)
    }

    fn combine(precision: f64, recall: f64, precision_defined: bool, recall_defined: bool) -> Self {
        let sum = precision + recall;
        let f_measure = if sum > 0.0 {
            2.0 * precision * recall / sum
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f_measure,
            g_mean: (precision * recall).sqrt(),
            precision_defined,
            recall_defined,
            f_measure_defined: sum > 0.0,
        }
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, false)
    } else {
        (num as f64 / den as f64, true)
    }
}

pub fn per_class_metrics(counts: &OneVsRestCounts) -> ClassMetrics {
    let (precision, p_ok) = ratio(counts.tp, counts.tp + counts.fp);
    let (recall, r_ok) = ratio(counts.tp, counts.tp + counts.fn_);
    ClassMetrics::combine(precision, recall, p_ok, r_ok)
}

/// Multiclass accuracy (trace over total) and its complement.
pub fn overall_accuracy(c: &ConfusionMatrix) -> Result<(f64, f64), MetricsError> {
    let total = c.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let accuracy = c.trace() as f64 / total as f64;
    Ok((accuracy, 1.0 - accuracy))
}

/// Unweighted arithmetic mean; 0 for an empty slice.
pub fn macro_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub overall_accuracy: f64,
    pub error_rate: f64,
    pub macro_f: f64,
    pub macro_g: f64,
    pub confusion: ConfusionMatrix,
    pub normalized_confusion: Vec<Vec<f64>>,
}

impl MetricsReport {
    pub fn class_names(&self) -> &[String] {
        self.confusion.class_names()
    }
}

pub fn aggregate_report(c: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let (overall_accuracy, error_rate) = overall_accuracy(c)?;
    let per_class = (0..c.n_classes())
        .map(|i| one_vs_rest(c, i).map(|ovr| per_class_metrics(&ovr)))
        .collect::<Result<Vec<_>, _>>()?;
    let f: Vec<f64> = per_class.iter().map(|m| m.f_measure).collect();
    let g: Vec<f64> = per_class.iter().map(|m| m.g_mean).collect();
    Ok(MetricsReport {
        macro_f: macro_mean(&f),
        macro_g: macro_mean(&g),
        per_class,
        overall_accuracy,
        error_rate,
        confusion: c.clone(),
        normalized_confusion: row_normalize(c),
    })
}
