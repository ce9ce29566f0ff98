//! Stratified k-fold cross-validation over the downstream classifiers.

use super::metrics::{classification_metrics, confusion, roc_auc, ConfusionMatrix};
use super::EvalError;
use crate::datagen::fmt_f64;
use crate::downstream::{self, ClassifierSpec};
use crate::numcore::{derive_seed, Matrix, Rng};

/// Metrics of one fold (or of the aggregate, where the confusion counts are
/// sums and the rates unweighted fold means).
#[derive(Debug, Clone, PartialEq)]
pub struct FoldMetrics {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub classifier: String,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub aggregate: FoldMetrics,
}

/// Stratified fold assignment: per-class seeded shuffle, then round-robin.
/// Returns `fold_of[i]` for every sample.
pub fn stratified_folds(y: &[i8], k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut fold_of = vec![0usize; y.len()];
    for (class_tag, label) in [("neg", -1i8), ("pos", 1i8)] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        if members.len() < k {
            return Err(EvalError::Stratification {
                label,
                count: members.len(),
                k,
            });
        }
        let mut rng = Rng::new(derive_seed(seed, class_tag));
        rng.shuffle(&mut members);
        for (j, &i) in members.iter().enumerate() {
            fold_of[i] = j % k;
        }
    }
    Ok(fold_of)
}

/// Fit and evaluate `spec` across stratified folds; the aggregate row holds
/// summed confusion counts and unweighted mean rates.
pub fn kfold_cv(
    x: &Matrix,
    y: &[i8],
    k: usize,
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<MetricsReport, EvalError> {
    if x.rows() != y.len() {
        return Err(EvalError::LengthMismatch {
            a: x.rows(),
            b: y.len(),
        });
    }
    let fold_of = stratified_folds(y, k, seed)?;

    let mut folds = Vec::with_capacity(k);
    let mut agg = ConfusionMatrix::new(0, 0, 0, 0);
    let mut sums = [0.0f64; 5]; // accuracy, precision, recall, f1, auc
    for fold in 0..k {
        let test_ids: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
        let train_ids: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let take = |ids: &[usize]| -> (Matrix, Vec<i8>) {
            let mut data = Vec::with_capacity(ids.len() * x.cols());
            let mut labels = Vec::with_capacity(ids.len());
            for &i in ids {
                data.extend_from_slice(x.row(i));
                labels.push(y[i]);
            }
            (
                Matrix::from_vec(ids.len(), x.cols(), data).expect("row-aligned"),
                labels,
            )
        };
        let (x_train, y_train) = take(&train_ids);
        let (x_test, y_test) = take(&test_ids);

        let model = downstream::fit(spec, &x_train, &y_train, derive_seed(seed, &format!("fold{fold}")))?;
        let scores = downstream::predict_proba(&model, &x_test)?;
        let preds: Vec<i8> = scores.iter().map(|&s| if s >= 0.5 { 1 } else { -1 }).collect();

        let cm = confusion(&y_test, &preds)?;
        let m = classification_metrics(&cm)?;
        let auc = roc_auc(&y_test, &scores)?;
        agg.true_pos += cm.true_pos;
        agg.false_pos += cm.false_pos;
        agg.false_neg += cm.false_neg;
        agg.true_neg += cm.true_neg;
        for (s, v) in sums
            .iter_mut()
            .zip([m.accuracy, m.precision, m.recall, m.f1, auc])
        {
            *s += v;
        }
        folds.push(FoldMetrics {
            fold,
            confusion: cm,
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            auc,
        });
    }
    let kf = k as f64;
    let aggregate = FoldMetrics {
        fold: k,
        confusion: agg,
        accuracy: sums[0] / kf,
        precision: sums[1] / kf,
        recall: sums[2] / kf,
        f1: sums[3] / kf,
        auc: sums[4] / kf,
    };
    Ok(MetricsReport {
        classifier: spec.kind.name().to_string(),
        seed,
        folds,
        aggregate,
    })
}

impl MetricsReport {
    /// Stable-key JSON with 17-significant-digit floats.
    pub fn to_json(&self) -> String {
        let entry = |m: &FoldMetrics| -> String {
            format!(
                "{{\"fold\":{},\"tp\":{},\"fp\":{},\"fn\":{},\"tn\":{},\
                 \"accuracy\":{},\"precision\":{},\"recall\":{},\"f1\":{},\"auc\":{}}}",
                m.fold,
                m.confusion.true_pos,
                m.confusion.false_pos,
                m.confusion.false_neg,
                m.confusion.true_neg,
                fmt_f64(m.accuracy),
                fmt_f64(m.precision),
                fmt_f64(m.recall),
                fmt_f64(m.f1),
                fmt_f64(m.auc),
            )
        };
        let folds: Vec<String> = self.folds.iter().map(&entry).collect();
        format!(
            "{{\"classifier\":\"{}\",\"seed\":{},\"folds\":[{}],\"aggregate\":{}}}",
            self.classifier,
            self.seed,
            folds.join(","),
            entry(&self.aggregate),
        )
    }
}
