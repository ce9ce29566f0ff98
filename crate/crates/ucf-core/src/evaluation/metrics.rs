//! Confusion matrices, classification rates, and ROC-AUC.
//!
//! AUC is computed as the Mann-Whitney rank statistic (ties get averaged
//! ranks), which equals trapezoidal integration of the ROC curve; both
//! routes exist and their agreement is a test.

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        ConfusionMatrix {
            true_pos: tp,
            false_pos: fp,
            false_neg: fn_,
            true_neg: tn,
        }
    }

    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

/// Count prediction outcomes; labels are -1/+1.
pub fn confusion(y_true: &[i8], y_pred: &[i8]) -> Result<ConfusionMatrix, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            a: y_true.len(),
            b: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t > 0, p > 0) {
            (true, true) => cm.true_pos += 1,
            (false, true) => cm.false_pos += 1,
            (true, false) => cm.false_neg += 1,
            (false, false) => cm.true_neg += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when the precision denominator (predicted positives) was zero
    /// and the 0-by-convention rule fired; same for recall below.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

/// Accuracy, precision, recall, F1 from a confusion matrix. Zero
/// denominators yield 0 with the corresponding flag set.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<ClassificationMetrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let tp = cm.true_pos as f64;
    let pred_pos = cm.true_pos + cm.false_pos;
    let actual_pos = cm.true_pos + cm.false_neg;
    let precision_undefined = pred_pos == 0;
    let recall_undefined = actual_pos == 0;
    let precision = if precision_undefined { 0.0 } else { tp / pred_pos as f64 };
    let recall = if recall_undefined { 0.0 } else { tp / actual_pos as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ClassificationMetrics {
        accuracy: (cm.true_pos + cm.true_neg) as f64 / total as f64,
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
    })
}

/// Rank-statistic ROC-AUC: the probability that a random positive outscores
/// a random negative, ties counting one half.
pub fn roc_auc(y_true: &[i8], scores: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            a: y_true.len(),
            b: scores.len(),
        });
    }
    let n_pos = y_true.iter().filter(|&&v| v > 0).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClassAuc);
    }

    // Average ranks over tied scores (1-based).
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }

    let rank_sum: f64 = y_true
        .iter()
        .zip(&ranks)
        .filter(|(&t, _)| t > 0)
        .map(|(_, &r)| r)
        .sum();
    let auc = (rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos * n_neg) as f64;
    Ok(auc)
}

/// ROC curve points as (false-positive rate, true-positive rate), starting
/// at (0,0) and ending at (1,1), thresholds descending, ties grouped.
pub fn roc_curve(y_true: &[i8], scores: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    if y_true.len() != scores.len() {
        return Err(EvalError::LengthMismatch {
            a: y_true.len(),
            b: scores.len(),
        });
    }
    let n_pos = y_true.iter().filter(|&&v| v > 0).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClassAuc);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &idx in &order[i..=j] {
            if y_true[idx] > 0 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
        i = j + 1;
    }
    Ok(points)
}

/// AUC via trapezoidal integration of the ROC curve.
pub fn roc_auc_trapezoid(y_true: &[i8], scores: &[f64]) -> Result<f64, EvalError> {
    let pts = roc_curve(y_true, scores)?;
    let mut auc = 0.0;
    for w in pts.windows(2) {
        auc += (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0;
    }
    Ok(auc)
}
