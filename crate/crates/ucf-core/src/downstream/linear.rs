//! Logistic regression (full-batch gradient descent) and a Pegasos-style
//! linear SVM. Both keep an unregularized intercept.

use crate::numcore::{Matrix, Rng};

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// L2-regularized log-loss, full-batch gradient descent.
pub(crate) fn fit_logistic(
    x: &Matrix,
    y: &[i8],
    lambda: f64,
    iterations: usize,
    lr: f64,
) -> LinearModel {
    let (n, e) = x.shape();
    let targets: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
    let mut w = vec![0.0; e];
    let mut b = 0.0;
    for _ in 0..iterations {
        let mut grad_w = vec![0.0; e];
        let mut grad_b = 0.0;
        for i in 0..n {
            let row = x.row(i);
            let p = sigmoid(w.iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + b);
            let err = p - targets[i];
            for (g, &xv) in grad_w.iter_mut().zip(row) {
                *g += err * xv;
            }
            grad_b += err;
        }
        let inv = 1.0 / n as f64;
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= lr * (g * inv + lambda * *wj);
        }
        b -= lr * grad_b * inv;
    }
    LinearModel { weights: w, bias: b }
}

/// Pegasos stochastic subgradient descent on hinge loss + L2. The bias
/// rides inside the regularized vector as a constant-1 feature, keeping the
/// 1/(lambda t) step schedule stable.
pub(crate) fn fit_svm(x: &Matrix, y: &[i8], lambda: f64, epochs: usize, seed: u64) -> LinearModel {
    let (n, e) = x.shape();
    let mut w = vec![0.0; e + 1];
    let mut rng = Rng::new(seed);
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..epochs {
        rng.shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = y[i] as f64;
            let row = x.row(i);
            let score: f64 =
                w[..e].iter().zip(row).map(|(w, x)| w * x).sum::<f64>() + w[e];
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if yi * score < 1.0 {
                for (wj, &xv) in w[..e].iter_mut().zip(row) {
                    *wj += eta * yi * xv;
                }
                w[e] += eta * yi;
            }
        }
    }
    let bias = w[e];
    w.truncate(e);
    LinearModel { weights: w, bias }
}
