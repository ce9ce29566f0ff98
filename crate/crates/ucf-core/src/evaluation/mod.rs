//! Metric computation, stratified cross-validation, exact t-SNE, and the
//! SVG/JSON artifact emitters.

mod cv;
mod metrics;
mod svg;
mod tsne;

pub use cv::{kfold_cv, stratified_folds, FoldMetrics, MetricsReport};
pub use metrics::{
    classification_metrics, confusion, roc_auc, roc_auc_trapezoid, roc_curve,
    ClassificationMetrics, ConfusionMatrix,
};
pub use svg::{roc_svg, scatter_svg};
pub use tsne::{
    kl_divergence, kl_gradient, tsne, tsne_affinities, TsneConfig, TsneResult, TSNE_MAX_POINTS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("ROC-AUC is undefined with a single class present")]
    SingleClassAuc,
    #[error("class {label} has {count} members, fewer than {k} folds")]
    Stratification { label: i8, count: usize, k: usize },
    #[error("{n} points exceed the exact t-SNE limit of {max}; subsample first (eval.tsne_subsample)")]
    TsneTooLarge { n: usize, max: usize },
    #[error("t-SNE config: {0}")]
    TsneConfig(String),
    #[error(transparent)]
    Fit(#[from] crate::downstream::FitError),
}
