//! Classical classifiers fitted on frozen encoder embeddings.
//!
//! Seven kinds, each implemented from first principles with one documented
//! default configuration. Hyperparameters arrive as a strict key-value map:
//! unknown keys are rejected. All stochastic kinds are deterministic under
//! the fit seed.

mod ensemble;
mod knn;
mod linear;
mod naive_bayes;
mod tree;

use std::collections::BTreeMap;

use crate::numcore::Matrix;
use ensemble::{BoostModel, ForestModel};
use knn::KnnModel;
use linear::{sigmoid, LinearModel};
use naive_bayes::GnbModel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("{kind:?} cannot fit a single-class training set")]
    SingleClass { kind: ClassifierKind },
    #[error("{kind:?} needs at least {needed} samples, got {got}")]
    TooFewSamples {
        kind: ClassifierKind,
        needed: usize,
        got: usize,
    },
    #[error("unknown hyperparameter key {0:?}")]
    UnknownHyper(String),
    #[error("hyperparameter {key:?}: {msg}")]
    BadHyper { key: String, msg: String },
    #[error("labels must be -1 or +1, got {0}")]
    BadLabel(i8),
    #[error("feature count {got} does not match training dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("feature matrix has {rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassifierKind {
    LogisticRegression,
    LinearSvm,
    Knn,
    GaussianNb,
    DecisionTree,
    RandomForest,
    GradientBoosting,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::LogisticRegression,
        ClassifierKind::LinearSvm,
        ClassifierKind::Knn,
        ClassifierKind::GaussianNb,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::GradientBoosting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::LogisticRegression => "logistic-regression",
            ClassifierKind::LinearSvm => "linear-svm",
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian-nb",
            ClassifierKind::DecisionTree => "decision-tree",
            ClassifierKind::RandomForest => "random-forest",
            ClassifierKind::GradientBoosting => "gradient-boosting",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

/// A classifier kind plus its hyperparameter overrides.
#[derive(Debug, Clone)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub hyper: BTreeMap<String, f64>,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            hyper: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.hyper.insert(key.to_string(), value);
        self
    }
}

/// Strict reader over the hyper map: every key must be consumed.
struct Hyper<'a> {
    map: &'a BTreeMap<String, f64>,
    used: Vec<&'a str>,
}

impl<'a> Hyper<'a> {
    fn new(map: &'a BTreeMap<String, f64>) -> Self {
        Hyper { map, used: Vec::new() }
    }

    fn float(&mut self, key: &'a str, default: f64) -> f64 {
        self.used.push(key);
        self.map.get(key).copied().unwrap_or(default)
    }

    fn count(&mut self, key: &'a str, default: usize) -> Result<usize, FitError> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(default),
            Some(&v) => {
                if v < 0.0 || v.fract() != 0.0 {
                    Err(FitError::BadHyper {
                        key: key.to_string(),
                        msg: format!("expected a nonnegative integer, got {v}"),
                    })
                } else {
                    Ok(v as usize)
                }
            }
        }
    }

    fn finish(self) -> Result<(), FitError> {
        for key in self.map.keys() {
            if !self.used.contains(&key.as_str()) {
                return Err(FitError::UnknownHyper(key.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum ModelImpl {
    Logistic(LinearModel),
    Svm(LinearModel),
    Knn(KnnModel),
    Gnb(GnbModel),
    Tree(tree::Tree),
    Forest(ForestModel),
    Boost(BoostModel),
}

/// A fitted classifier plus its training metadata.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub kind: ClassifierKind,
    pub seed: u64,
    pub hyper: BTreeMap<String, f64>,
    dim: usize,
    inner: ModelImpl,
}

/// Fit a classifier on embedding rows with labels in {-1, +1}.
pub fn fit(spec: &ClassifierSpec, x: &Matrix, y: &[i8], seed: u64) -> Result<FittedModel, FitError> {
    if x.rows() != y.len() {
        return Err(FitError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1 && v != -1) {
        return Err(FitError::BadLabel(bad));
    }
    if x.rows() < 2 {
        return Err(FitError::TooFewSamples {
            kind: spec.kind,
            needed: 2,
            got: x.rows(),
        });
    }
    let has_pos = y.iter().any(|&v| v > 0);
    let has_neg = y.iter().any(|&v| v < 0);
    let both = has_pos && has_neg;
    let mut h = Hyper::new(&spec.hyper);

    let inner = match spec.kind {
        ClassifierKind::LogisticRegression => {
            if !both {
                return Err(FitError::SingleClass { kind: spec.kind });
            }
            let lambda = h.float("lambda", 1e-4);
            let iters = h.count("iterations", 500)?;
            let lr = h.float("lr", 0.1);
            ModelImpl::Logistic(linear::fit_logistic(x, y, lambda, iters, lr))
        }
        ClassifierKind::LinearSvm => {
            if !both {
                return Err(FitError::SingleClass { kind: spec.kind });
            }
            let lambda = h.float("lambda", 1e-4);
            let epochs = h.count("epochs", 20)?;
            ModelImpl::Svm(linear::fit_svm(x, y, lambda, epochs, seed))
        }
        ClassifierKind::Knn => {
            let k = h.count("k", 5)?.max(1);
            if x.rows() < k {
                return Err(FitError::TooFewSamples {
                    kind: spec.kind,
                    needed: k,
                    got: x.rows(),
                });
            }
            ModelImpl::Knn(KnnModel {
                k,
                x: x.clone(),
                y: y.to_vec(),
            })
        }
        ClassifierKind::GaussianNb => {
            let smoothing = h.float("var_smoothing", 1e-9);
            ModelImpl::Gnb(naive_bayes::fit_gnb(x, y, smoothing))
        }
        ClassifierKind::DecisionTree => {
            let cfg = tree::TreeConfig {
                max_depth: h.count("max_depth", 8)?,
                min_leaf: h.count("min_leaf", 5)?.max(1),
                mtry: None,
            };
            let targets: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
            let ids: Vec<usize> = (0..x.rows()).collect();
            let leaf = |ids: &[usize]| -> f64 {
                ids.iter().map(|&i| targets[i]).sum::<f64>() / ids.len() as f64
            };
            ModelImpl::Tree(tree::build_tree(x, &ids, &targets, &cfg, None, &leaf))
        }
        ClassifierKind::RandomForest => {
            let trees = h.count("trees", 100)?;
            let max_depth = h.count("max_depth", 8)?;
            let min_leaf = h.count("min_leaf", 5)?.max(1);
            let default_mtry = (x.cols() as f64).sqrt().ceil() as usize;
            let mtry = h.count("features_per_split", default_mtry)?.max(1);
            ModelImpl::Forest(ensemble::fit_forest(
                x, y, trees, max_depth, min_leaf, mtry, seed,
            ))
        }
        ClassifierKind::GradientBoosting => {
            if !both {
                return Err(FitError::SingleClass { kind: spec.kind });
            }
            let trees = h.count("trees", 100)?;
            let depth = h.count("depth", 3)?;
            let min_leaf = h.count("min_leaf", 5)?.max(1);
            let shrinkage = h.float("shrinkage", 0.1);
            ModelImpl::Boost(ensemble::fit_boost(x, y, trees, depth, min_leaf, shrinkage))
        }
    };
    h.finish()?;
    Ok(FittedModel {
        kind: spec.kind,
        seed,
        hyper: spec.hyper.clone(),
        dim: x.cols(),
        inner,
    })
}

/// Probability of the positive class for every row of `x`.
///
/// Linear SVM scores pass through a rank-preserving sigmoid of the margin;
/// they order correctly for ROC analysis but are not calibrated.
pub fn predict_proba(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>, FitError> {
    if x.cols() != model.dim {
        return Err(FitError::DimMismatch {
            expected: model.dim,
            got: x.cols(),
        });
    }
    let mut out = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let row = x.row(i);
        let p = match &model.inner {
            ModelImpl::Logistic(m) | ModelImpl::Svm(m) => sigmoid(m.margin(row)),
            ModelImpl::Knn(m) => m.positive_fraction(row),
            ModelImpl::Gnb(m) => m.posterior_positive(row),
            ModelImpl::Tree(t) => t.predict_row(row),
            ModelImpl::Forest(f) => f.positive_fraction(row),
            ModelImpl::Boost(b) => b.positive_probability(row),
        };
        out.push(p);
    }
    Ok(out)
}

/// Hard labels: +1 iff the positive-class score is at least `threshold`.
pub fn predict(model: &FittedModel, x: &Matrix, threshold: f64) -> Result<Vec<i8>, FitError> {
    Ok(predict_proba(model, x)?
        .into_iter()
        .map(|p| if p >= threshold { 1 } else { -1 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Rng;

    fn gaussian_blobs(n_per: usize, sep: f64, seed: u64) -> (Matrix, Vec<i8>) {
        let mut rng = Rng::new(seed);
        let mut data = Vec::new();
        let mut y = Vec::new();
        for sign in [-1.0f64, 1.0] {
            for _ in 0..n_per {
                data.push(sign * sep / 2.0 + rng.next_gaussian());
                data.push(rng.next_gaussian());
                y.push(if sign > 0.0 { 1i8 } else { -1 });
            }
        }
        (Matrix::from_vec(2 * n_per, 2, data).unwrap(), y)
    }

    #[test]
    fn all_kinds_fit_and_stay_in_unit_interval() {
        let (x, y) = gaussian_blobs(40, 4.0, 1);
        for kind in ClassifierKind::ALL {
            let model = fit(&ClassifierSpec::new(kind), &x, &y, 7).unwrap();
            let probs = predict_proba(&model, &x).unwrap();
            assert!(
                probs.iter().all(|p| (0.0..=1.0).contains(p)),
                "{kind:?} out of range"
            );
            let acc = predict(&model, &x, 0.5)
                .unwrap()
                .iter()
                .zip(&y)
                .filter(|(a, b)| a == b)
                .count() as f64
                / y.len() as f64;
            assert!(acc > 0.85, "{kind:?} train accuracy {acc}");
        }
    }

    #[test]
    fn logistic_perfect_on_separable_clusters() {
        let (x, y) = gaussian_blobs(50, 10.0, 2);
        let model = fit(
            &ClassifierSpec::new(ClassifierKind::LogisticRegression),
            &x,
            &y,
            0,
        )
        .unwrap();
        let preds = predict(&model, &x, 0.5).unwrap();
        assert_eq!(preds, y);
    }

    #[test]
    fn unknown_hyper_key_rejected() {
        let (x, y) = gaussian_blobs(10, 4.0, 3);
        let spec = ClassifierSpec::new(ClassifierKind::Knn).with("neighbours", 3.0);
        assert!(matches!(
            fit(&spec, &x, &y, 0),
            Err(FitError::UnknownHyper(k)) if k == "neighbours"
        ));
    }

    #[test]
    fn single_class_rejected_for_margin_kinds() {
        let x = Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let y = vec![1, 1, 1, 1];
        for kind in [
            ClassifierKind::LogisticRegression,
            ClassifierKind::LinearSvm,
            ClassifierKind::GradientBoosting,
        ] {
            assert!(matches!(
                fit(&ClassifierSpec::new(kind), &x, &y, 0),
                Err(FitError::SingleClass { .. })
            ));
        }
        // Memorizing and generative kinds tolerate it.
        for kind in [
            ClassifierKind::Knn,
            ClassifierKind::GaussianNb,
            ClassifierKind::DecisionTree,
            ClassifierKind::RandomForest,
        ] {
            let spec = if kind == ClassifierKind::Knn {
                ClassifierSpec::new(kind).with("k", 2.0)
            } else {
                ClassifierSpec::new(kind)
            };
            let m = fit(&spec, &x, &y, 0);
            assert!(m.is_ok(), "{kind:?} should fit a single class");
        }
    }

    #[test]
    fn knn_invariant_to_duplicates_of_predicted_class() {
        let (x, y) = gaussian_blobs(20, 5.0, 4);
        let model = fit(&ClassifierSpec::new(ClassifierKind::Knn), &x, &y, 0).unwrap();
        let query = Matrix::from_vec(1, 2, vec![2.5, 0.0]).unwrap();
        let before = predict(&model, &query, 0.5).unwrap()[0];

        // Append copies of a training point from the predicted class.
        let dup_idx = y.iter().position(|&v| v == before).unwrap();
        let mut data = x.data().to_vec();
        let mut y2 = y.clone();
        for _ in 0..5 {
            data.extend_from_slice(x.row(dup_idx));
            y2.push(before);
        }
        let x2 = Matrix::from_vec(x.rows() + 5, 2, data).unwrap();
        let model2 = fit(&ClassifierSpec::new(ClassifierKind::Knn), &x2, &y2, 0).unwrap();
        let after = predict(&model2, &query, 0.5).unwrap()[0];
        assert_eq!(before, after);
    }

    #[test]
    fn trees_invariant_to_monotone_feature_transform() {
        let (x, y) = gaussian_blobs(30, 3.0, 5);
        // Strictly increasing map applied consistently to train and test.
        let warp = |v: f64| v.exp() + 0.1 * v;
        let warped = x.map(warp);
        let queries = gaussian_blobs(10, 3.0, 99).0;
        let warped_queries = queries.map(warp);

        for kind in [
            ClassifierKind::DecisionTree,
            ClassifierKind::RandomForest,
            ClassifierKind::GradientBoosting,
        ] {
            let plain = fit(&ClassifierSpec::new(kind), &x, &y, 11).unwrap();
            let transformed = fit(&ClassifierSpec::new(kind), &warped, &y, 11).unwrap();
            let a = predict(&plain, &queries, 0.5).unwrap();
            let b = predict(&transformed, &warped_queries, 0.5).unwrap();
            assert_eq!(a, b, "{kind:?} changed under monotone transform");
        }
    }

    #[test]
    fn seed_determinism_for_stochastic_kinds() {
        let (x, y) = gaussian_blobs(30, 2.0, 6);
        for kind in [
            ClassifierKind::RandomForest,
            ClassifierKind::GradientBoosting,
            ClassifierKind::LinearSvm,
        ] {
            let a = fit(&ClassifierSpec::new(kind), &x, &y, 123).unwrap();
            let b = fit(&ClassifierSpec::new(kind), &x, &y, 123).unwrap();
            let pa = predict_proba(&a, &x).unwrap();
            let pb = predict_proba(&b, &x).unwrap();
            assert_eq!(pa, pb, "{kind:?} not deterministic under seed");
        }
    }

    #[test]
    fn threshold_boundaries() {
        let (x, y) = gaussian_blobs(15, 3.0, 7);
        let model = fit(&ClassifierSpec::new(ClassifierKind::Knn), &x, &y, 0).unwrap();
        let all_pos = predict(&model, &x, 0.0).unwrap();
        assert!(all_pos.iter().all(|&v| v == 1));
        let all_neg = predict(&model, &x, 1.0 + 1e-9).unwrap();
        assert!(all_neg.iter().all(|&v| v == -1));
    }

    #[test]
    fn predict_dim_mismatch() {
        let (x, y) = gaussian_blobs(10, 3.0, 8);
        let model = fit(&ClassifierSpec::new(ClassifierKind::GaussianNb), &x, &y, 0).unwrap();
        let bad = Matrix::from_vec(1, 3, vec![0.0; 3]).unwrap();
        assert!(matches!(
            predict_proba(&model, &bad),
            Err(FitError::DimMismatch { expected: 2, got: 3 })
        ));
    }
}
