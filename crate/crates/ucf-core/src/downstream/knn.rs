//! K-nearest neighbors with Euclidean distance; distance ties break toward
//! the lower training index.

use crate::numcore::Matrix;

#[derive(Debug, Clone)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<i8>,
}

impl KnnModel {
    /// Fraction of positive labels among the k nearest neighbors.
    pub fn positive_fraction(&self, row: &[f64]) -> f64 {
        let n = self.x.rows();
        let mut dist: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let d = self
                    .x
                    .row(i)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (d, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let pos = dist[..self.k].iter().filter(|&&(_, i)| self.y[i] > 0).count();
        pos as f64 / self.k as f64
    }
}
