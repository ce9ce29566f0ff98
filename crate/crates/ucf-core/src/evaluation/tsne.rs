//! Exact t-SNE (quadratic affinities, no tree approximation).
//!
//! Per-point Gaussian bandwidths come from a binary search matching the
//! target entropy to 1e-5 within 50 iterations. The joint P is symmetrized
//! and the 2-D embedding minimizes KL(P || Q) under a Student-t Q with the
//! classic schedule: early exaggeration, then momentum switch.

use super::EvalError;
use crate::numcore::{Matrix, Rng};

#[derive(Debug, Clone)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_start: f64,
    pub momentum_late: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_start: 0.5,
            momentum_late: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    /// n x 2 embedding coordinates.
    pub coords: Matrix,
    pub initial_kl: f64,
    pub final_kl: f64,
}

/// Largest input the exact method accepts.
pub const TSNE_MAX_POINTS: usize = 5000;

/// Symmetrized joint affinities from per-point perplexity-calibrated
/// Gaussians. Rows of `x` are points.
pub fn tsne_affinities(x: &Matrix, perplexity: f64) -> Result<Matrix, EvalError> {
    let n = x.rows();
    let d2 = pairwise_sq_dists(x);
    let target_entropy = perplexity.ln();
    let mut cond = Matrix::zeros(n, n);

    for i in 0..n {
        let mut beta = 1.0;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        for _ in 0..50 {
            // P(j|i) under the current bandwidth.
            let mut sum = 0.0;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let p = (-beta * d2.get(i, j)).exp();
                cond.set(i, j, p);
                sum += p;
            }
            let mut entropy = 0.0;
            if sum > 0.0 {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let p = cond.get(i, j) / sum;
                    cond.set(i, j, p);
                    if p > 1e-12 {
                        entropy -= p * p.ln();
                    }
                }
            }
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-5 {
                break;
            }
            if diff > 0.0 {
                beta_min = beta;
                beta = if beta_max.is_finite() {
                    (beta + beta_max) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_finite() {
                    (beta + beta_min) / 2.0
                } else {
                    beta / 2.0
                };
            }
        }
    }

    // Symmetrize and normalize to a joint distribution.
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = (cond.get(i, j) + cond.get(j, i)) / (2.0 * n as f64);
            p.set(i, j, v.max(1e-12));
        }
        p.set(i, i, 0.0);
    }
    Ok(p)
}

fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d2 = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            d2.set(i, j, d);
            d2.set(j, i, d);
        }
    }
    d2
}

/// Student-t kernel weights (1 + |y_i - y_j|^2)^-1 and their total.
fn student_weights(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let mut w = Matrix::zeros(n, n);
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = y
                .row(i)
                .iter()
                .zip(y.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            let v = 1.0 / (1.0 + d);
            w.set(i, j, v);
            w.set(j, i, v);
            total += 2.0 * v;
        }
    }
    (w, total)
}

/// KL(P || Q) of the embedding `y` against affinities `p`.
pub fn kl_divergence(p: &Matrix, y: &Matrix) -> f64 {
    let n = p.rows();
    let (w, total) = student_weights(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p.get(i, j);
            if pij > 0.0 {
                let qij = (w.get(i, j) / total).max(1e-12);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Analytic KL gradient with respect to the embedding coordinates:
/// 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j).
pub fn kl_gradient(p: &Matrix, y: &Matrix) -> Matrix {
    let n = y.rows();
    let dims = y.cols();
    let (w, total) = student_weights(y);
    let mut grad = Matrix::zeros(n, dims);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let wij = w.get(i, j);
            let qij = (wij / total).max(1e-12);
            let coeff = 4.0 * (p.get(i, j) - qij) * wij;
            for c in 0..dims {
                let delta = y.get(i, c) - y.get(j, c);
                grad.set(i, c, grad.get(i, c) + coeff * delta);
            }
        }
    }
    grad
}

/// Exact t-SNE to 2 dimensions.
pub fn tsne(x: &Matrix, cfg: &TsneConfig) -> Result<TsneResult, EvalError> {
    let n = x.rows();
    if n > TSNE_MAX_POINTS {
        return Err(EvalError::TsneTooLarge {
            n,
            max: TSNE_MAX_POINTS,
        });
    }
    if n < 10 {
        return Err(EvalError::TsneConfig(format!(
            "need at least 10 points, got {n}"
        )));
    }
    if cfg.perplexity >= n as f64 / 3.0 || cfg.perplexity < 1.0 {
        return Err(EvalError::TsneConfig(format!(
            "perplexity {} must lie in [1, n/3) for n = {n}",
            cfg.perplexity
        )));
    }

    let p = tsne_affinities(x, cfg.perplexity)?;

    // Seeded Gaussian start at the classic 1e-4 scale.
    let mut rng = Rng::new(cfg.seed);
    let mut y = Matrix::zeros(n, 2);
    for r in 0..n {
        for c in 0..2 {
            y.set(r, c, 1e-4 * rng.next_gaussian());
        }
    }
    let initial_kl = kl_divergence(&p, &y);

    // Momentum descent with the per-coordinate gain schedule of the
    // reference implementations (gains grow 0.2 when gradient and velocity
    // disagree in sign, shrink x0.8 otherwise, floored at 0.01); the raw
    // learning rate 200 diverges without it.
    let mut velocity = Matrix::zeros(n, 2);
    let mut gains = Matrix::from_vec(n, 2, vec![1.0; n * 2]).expect("sized to fit");
    let mut p_work = p.clone();
    for it in 0..cfg.iterations {
        let exaggerate = it < cfg.exaggeration_iters;
        if exaggerate {
            p_work = p.scale(cfg.early_exaggeration);
        } else if it == cfg.exaggeration_iters {
            p_work = p.clone();
        }
        let grad = kl_gradient(&p_work, &y);
        let momentum = if it < cfg.momentum_switch {
            cfg.momentum_start
        } else {
            cfg.momentum_late
        };
        for r in 0..n {
            for c in 0..2 {
                let g = grad.get(r, c);
                let v_old = velocity.get(r, c);
                let gain = if (g > 0.0) != (v_old > 0.0) {
                    gains.get(r, c) + 0.2
                } else {
                    (gains.get(r, c) * 0.8).max(0.01)
                };
                gains.set(r, c, gain);
                let v = momentum * v_old - cfg.learning_rate * gain * g;
                velocity.set(r, c, v);
                y.set(r, c, y.get(r, c) + v);
            }
        }
        // Re-center; KL is translation invariant.
        let mean = y.mean_rows();
        for r in 0..n {
            for c in 0..2 {
                y.set(r, c, y.get(r, c) - mean.get(0, c));
            }
        }
    }

    let final_kl = kl_divergence(&p, &y);
    Ok(TsneResult {
        coords: y,
        initial_kl,
        final_kl,
    })
}
