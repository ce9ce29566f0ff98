//! Bagged forests and gradient boosting over the shared CART builder.

use super::linear::sigmoid;
use super::tree::{build_tree, Tree, TreeConfig};
use crate::numcore::{derive_seed, Matrix, Rng};

#[derive(Debug, Clone)]
pub struct ForestModel {
    pub(crate) trees: Vec<Tree>,
}

/// Bootstrap-bagged classification trees with per-split feature subsetting.
pub(crate) fn fit_forest(
    x: &Matrix,
    y: &[i8],
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    seed: u64,
) -> ForestModel {
    let n = x.rows();
    let targets: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
    let cfg = TreeConfig {
        max_depth,
        min_leaf,
        mtry: Some(mtry),
    };
    let leaf = |ids: &[usize]| -> f64 {
        ids.iter().map(|&i| targets[i]).sum::<f64>() / ids.len() as f64
    };
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = Rng::new(derive_seed(seed, &format!("tree{t}")));
            let sample: Vec<usize> = (0..n).map(|_| rng.next_index(n)).collect();
            build_tree(x, &sample, &targets, &cfg, Some(&mut rng), &leaf)
        })
        .collect();
    ForestModel { trees }
}

impl ForestModel {
    /// Mean of the per-tree leaf positive fractions.
    pub fn positive_fraction(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        sum / self.trees.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct BoostModel {
    pub(crate) init: f64,
    pub(crate) shrinkage: f64,
    pub(crate) trees: Vec<Tree>,
}

/// Gradient boosting on the logistic loss: depth-limited regression trees
/// fitted to residuals, leaves taking a Newton step (sum of residuals over
/// sum of hessians).
pub(crate) fn fit_boost(
    x: &Matrix,
    y: &[i8],
    n_trees: usize,
    depth: usize,
    min_leaf: usize,
    shrinkage: f64,
) -> BoostModel {
    let n = x.rows();
    let targets: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
    let pos = targets.iter().sum::<f64>();
    let init = (pos / (n as f64 - pos)).ln();

    let mut scores = vec![init; n];
    let mut trees = Vec::with_capacity(n_trees);
    let cfg = TreeConfig {
        max_depth: depth,
        min_leaf,
        mtry: None,
    };
    let all: Vec<usize> = (0..n).collect();
    for _ in 0..n_trees {
        let probs: Vec<f64> = scores.iter().map(|&s| sigmoid(s)).collect();
        let residuals: Vec<f64> = targets.iter().zip(&probs).map(|(t, p)| t - p).collect();
        let hessians: Vec<f64> = probs.iter().map(|p| (p * (1.0 - p)).max(1e-12)).collect();
        let leaf = |ids: &[usize]| -> f64 {
            let g: f64 = ids.iter().map(|&i| residuals[i]).sum();
            let h: f64 = ids.iter().map(|&i| hessians[i]).sum();
            g / h
        };
        let tree = build_tree(x, &all, &residuals, &cfg, None, &leaf);
        for (i, s) in scores.iter_mut().enumerate() {
            *s += shrinkage * tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }
    BoostModel {
        init,
        shrinkage,
        trees,
    }
}

impl BoostModel {
    pub fn positive_probability(&self, row: &[f64]) -> f64 {
        let mut score = self.init;
        for t in &self.trees {
            score += self.shrinkage * t.predict_row(row);
        }
        sigmoid(score)
    }
}
