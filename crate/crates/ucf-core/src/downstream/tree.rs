//! Shared CART machinery for the tree-based classifiers.
//!
//! Splits minimize the sum of squared errors of the target values, which for
//! 0/1 targets is proportional to Gini impurity, so one builder serves the
//! classification trees, the forest, and the boosting regression trees.
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; ties in gain resolve to the lower feature index, then the lower
//! threshold (features and thresholds are scanned in ascending order and a
//! candidate must strictly beat the incumbent).

use crate::numcore::{Matrix, Rng};

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features considered per split; `None` means all.
    pub mtry: Option<usize>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Grow a tree over `indices` (row ids into `x`). `leaf_value` maps the
/// sample ids reaching a leaf to its prediction.
pub(crate) fn build_tree(
    x: &Matrix,
    indices: &[usize],
    targets: &[f64],
    cfg: &TreeConfig,
    mut rng: Option<&mut Rng>,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    // One global sort per feature; nodes filter it by membership.
    let n_features = x.cols();
    let sorted: Vec<Vec<usize>> = (0..n_features)
        .map(|f| {
            let mut order = indices.to_vec();
            order.sort_by(|&a, &b| x.get(a, f).partial_cmp(&x.get(b, f)).unwrap());
            order
        })
        .collect();

    let mut tree = Tree { nodes: Vec::new() };
    grow(
        x,
        indices,
        targets,
        cfg,
        &sorted,
        &mut rng,
        leaf_value,
        0,
        &mut tree,
    );
    tree
}

#[allow(clippy::too_many_arguments)]
fn grow(
    x: &Matrix,
    members: &[usize],
    targets: &[f64],
    cfg: &TreeConfig,
    sorted: &[Vec<usize>],
    rng: &mut Option<&mut Rng>,
    leaf_value: &dyn Fn(&[usize]) -> f64,
    depth: usize,
    tree: &mut Tree,
) -> usize {
    let n = members.len();
    let slot = tree.nodes.len();
    tree.nodes.push(Node::Leaf { value: 0.0 });

    let sum: f64 = members.iter().map(|&i| targets[i]).sum();
    let sumsq: f64 = members.iter().map(|&i| targets[i] * targets[i]).sum();
    let sse = sumsq - sum * sum / n as f64;

    let can_split = depth < cfg.max_depth && n >= 2 * cfg.min_leaf && sse > 1e-12;
    let best = if can_split {
        best_split(x, members, targets, cfg, sorted, rng, sum, sse)
    } else {
        None
    };

    match best {
        None => {
            tree.nodes[slot] = Node::Leaf {
                value: leaf_value(members),
            };
        }
        Some((feature, threshold)) => {
            let (left_members, right_members): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&i| x.get(i, feature) <= threshold);
            let left = grow(
                x,
                &left_members,
                targets,
                cfg,
                sorted,
                rng,
                leaf_value,
                depth + 1,
                tree,
            );
            let right = grow(
                x,
                &right_members,
                targets,
                cfg,
                sorted,
                rng,
                leaf_value,
                depth + 1,
                tree,
            );
            tree.nodes[slot] = Node::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
    }
    slot
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    x: &Matrix,
    members: &[usize],
    targets: &[f64],
    cfg: &TreeConfig,
    sorted: &[Vec<usize>],
    rng: &mut Option<&mut Rng>,
    total_sum: f64,
    parent_sse: f64,
) -> Option<(usize, f64)> {
    let n = members.len();
    let n_features = x.cols();
    let features: Vec<usize> = match (cfg.mtry, rng.as_deref_mut()) {
        (Some(m), Some(rng)) if m < n_features => {
            let all: Vec<usize> = (0..n_features).collect();
            let mut pick = rng.sample_without_replacement(&all, m);
            pick.sort_unstable();
            pick
        }
        _ => (0..n_features).collect(),
    };

    let mut in_node = vec![false; x.rows()];
    for &i in members {
        in_node[i] = true;
    }

    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    for &f in &features {
        let ordered: Vec<usize> = sorted[f].iter().copied().filter(|&i| in_node[i]).collect();
        let mut left_n = 0usize;
        let mut left_sum = 0.0;
        let mut left_sumsq = 0.0;
        for w in 0..n - 1 {
            let i = ordered[w];
            left_n += 1;
            left_sum += targets[i];
            left_sumsq += targets[i] * targets[i];
            let lo = x.get(i, f);
            let hi = x.get(ordered[w + 1], f);
            if lo == hi {
                continue;
            }
            let right_n = n - left_n;
            if left_n < cfg.min_leaf || right_n < cfg.min_leaf {
                continue;
            }
            let left_sse = left_sumsq - left_sum * left_sum / left_n as f64;
            let right_sum = total_sum - left_sum;
            let right_sumsq = {
                let total_sumsq = parent_sse + total_sum * total_sum / n as f64;
                total_sumsq - left_sumsq
            };
            let right_sse = right_sumsq - right_sum * right_sum / right_n as f64;
            let gain = parent_sse - left_sse - right_sse;
            if gain > 1e-12 && best.map_or(true, |(g, _, _)| gain > g) {
                best = Some((gain, f, (lo + hi) / 2.0));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}
