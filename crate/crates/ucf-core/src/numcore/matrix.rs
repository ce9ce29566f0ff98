//! Dense row-major `f64` matrices.
//!
//! Everything the encoder and losses touch is a small dense matrix; there is
//! no sparse storage and no broadcasting beyond the explicit row-vector ops.

use super::NumError;

/// Dense matrix, row-major, 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumError> {
        if data.len() != rows * cols {
            return Err(NumError::BadInit {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Single-row matrix from a slice.
    pub fn row_vector(values: &[f64]) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        }
    }

    /// Single-column matrix from a slice.
    pub fn col_vector(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// 1x1 matrix.
    pub fn scalar(value: f64) -> Self {
        Matrix {
            rows: 1,
            cols: 1,
            data: vec![value],
        }
    }

    /// One-hot row of length `n` with a single 1.0 at `index`.
    pub fn one_hot_row(n: usize, index: usize) -> Self {
        let mut m = Matrix::zeros(1, n);
        m.data[index] = 1.0;
        m
    }

    /// One-hot column of length `n` with a single 1.0 at `index`.
    pub fn one_hot_col(n: usize, index: usize) -> Self {
        let mut m = Matrix::zeros(n, 1);
        m.data[index] = 1.0;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// True if the shapes are equal (used by the element-wise ops).
    fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Standard matrix product; entry (i,j) = sum_k a(i,k) * b(k,j).
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != b.rows {
            return Err(NumError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let o_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (k, &aik) in a_row.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &bkj) in o_row.iter_mut().zip(b_row.iter()) {
                    *o += aik * bkj;
                }
            }
        }
        Ok(out)
    }

    /// `self * b^T` without materializing the transpose.
    pub fn matmul_transpose_b(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != b.cols {
            return Err(NumError::ShapeMismatch {
                op: "matmul_transpose_b",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, b.rows);
        for i in 0..self.rows {
            let a_row = self.row(i);
            for j in 0..b.rows {
                let b_row = b.row(j);
                let mut acc = 0.0;
                for (&x, &y) in a_row.iter().zip(b_row.iter()) {
                    acc += x * y;
                }
                out.data[i * b.rows + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn add(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if !self.same_shape(b) {
            return Err(NumError::ShapeMismatch {
                op: "add",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if !self.same_shape(b) {
            return Err(NumError::ShapeMismatch {
                op: "sub",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Element-wise product.
    pub fn hadamard(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if !self.same_shape(b) {
            return Err(NumError::ShapeMismatch {
                op: "hadamard",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let data = self.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    /// Add a 1xN row vector to every row.
    pub fn add_row_broadcast(&self, row: &Matrix) -> Result<Matrix, NumError> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(NumError::ShapeMismatch {
                op: "add_row_broadcast",
                lhs: self.shape(),
                rhs: row.shape(),
            });
        }
        let mut out = self.clone();
        for r in 0..out.rows {
            for c in 0..out.cols {
                out.data[r * out.cols + c] += row.data[c];
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row-wise softmax with row-max subtraction for stability.
    pub fn softmax_rows(&self) -> Matrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        out
    }

    /// Normalize every row to unit Euclidean norm; rows with norm below
    /// 1e-12 are left all-zero.
    pub fn l2_normalize_rows(&self) -> Matrix {
        let mut out = self.clone();
        for r in 0..self.rows {
            let row = &mut out.data[r * self.cols..(r + 1) * self.cols];
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-12 {
                for v in row.iter_mut() {
                    *v = 0.0;
                }
            } else {
                for v in row.iter_mut() {
                    *v /= norm;
                }
            }
        }
        out
    }

    /// Mean over rows: MxN -> 1xN.
    pub fn mean_rows(&self) -> Matrix {
        let mut out = Matrix::zeros(1, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c] += self.data[r * self.cols + c];
            }
        }
        let inv = 1.0 / self.rows as f64;
        for v in &mut out.data {
            *v *= inv;
        }
        out
    }

    /// Sum of all entries as a 1x1 matrix.
    pub fn sum_all(&self) -> Matrix {
        Matrix::scalar(self.data.iter().sum())
    }

    pub fn concat_rows(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if self.cols != b.cols {
            return Err(NumError::ShapeMismatch {
                op: "concat_rows",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&b.data);
        Ok(Matrix {
            rows: self.rows + b.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn concat_cols(&self, b: &Matrix) -> Result<Matrix, NumError> {
        if self.rows != b.rows {
            return Err(NumError::ShapeMismatch {
                op: "concat_cols",
                lhs: self.shape(),
                rhs: b.shape(),
            });
        }
        let cols = self.cols + b.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(b.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn matmul_identity() {
        let i2 = Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Matrix::from_vec(2, 2, vec![3.0, -1.0, 2.5, 7.0]).unwrap();
        assert_eq!(i2.matmul(&m).unwrap(), m);
    }

    #[test]
    fn matmul_zero() {
        let z = Matrix::zeros(2, 2);
        let m = Matrix::from_vec(2, 2, vec![3.0, -1.0, 2.5, 7.0]).unwrap();
        assert_eq!(z.matmul(&m).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn matmul_hand_arithmetic() {
        // [[1,2],[3,4]] x [[5,6],[7,8]] = [[19,22],[43,50]]
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Matrix::from_vec(2, 2, vec![5.0, 6.0, 7.0, 8.0]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "missing shapes in: {msg}");
    }

    #[test]
    fn matmul_associative_small() {
        let a = Matrix::from_vec(2, 3, vec![0.5, -1.0, 2.0, 1.5, 0.25, -0.75]).unwrap();
        let b = Matrix::from_vec(3, 2, vec![1.0, 2.0, -0.5, 0.75, 3.0, -1.25]).unwrap();
        let c = Matrix::from_vec(2, 2, vec![0.2, -0.4, 1.1, 0.9]).unwrap();
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        for (x, y) in left.data().iter().zip(right.data()) {
            let denom = x.abs().max(y.abs()).max(1.0);
            assert!((x - y).abs() / denom < 1e-9);
        }
    }

    #[test]
    fn softmax_symmetry_and_stability() {
        let m = Matrix::row_vector(&[0.0, 0.0]).softmax_rows();
        approx(m.get(0, 0), 0.5, 1e-15);
        let big = Matrix::row_vector(&[1000.0, 0.0]).softmax_rows();
        assert!(big.is_finite());
        approx(big.get(0, 0), 1.0, 1e-12);
    }

    #[test]
    fn softmax_closed_form() {
        // [ln 1, ln 3] -> [0.25, 0.75]
        let m = Matrix::row_vector(&[0.0_f64, 3.0_f64.ln()]).softmax_rows();
        approx(m.get(0, 0), 0.25, 1e-12);
        approx(m.get(0, 1), 0.75, 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let m = Matrix::from_vec(2, 3, vec![0.1, -2.0, 5.0, 1.0, 1.0, 1.0]).unwrap();
        let s = m.softmax_rows();
        for r in 0..2 {
            let sum: f64 = s.row(r).iter().sum();
            approx(sum, 1.0, 1e-12);
        }
        let shifted = m.map(|v| v + 17.5).softmax_rows();
        for (a, b) in s.data().iter().zip(shifted.data()) {
            approx(*a, *b, 1e-12);
        }
    }

    #[test]
    fn l2_normalize_three_four_five() {
        let m = Matrix::row_vector(&[3.0, 4.0]).l2_normalize_rows();
        approx(m.get(0, 0), 0.6, 1e-15);
        approx(m.get(0, 1), 0.8, 1e-15);
    }

    #[test]
    fn l2_normalize_idempotent_and_degenerate() {
        let unit = Matrix::row_vector(&[0.6, 0.8]);
        assert_eq!(unit.l2_normalize_rows(), unit);
        let zero = Matrix::row_vector(&[0.0, 0.0]);
        assert_eq!(zero.l2_normalize_rows(), zero);
    }

    #[test]
    fn mean_rows_and_concat() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m.mean_rows().data(), &[2.0, 3.0]);
        let top = Matrix::row_vector(&[1.0, 2.0]);
        let bot = Matrix::row_vector(&[3.0, 4.0]);
        assert_eq!(top.concat_rows(&bot).unwrap(), m);
        let left = Matrix::col_vector(&[1.0, 3.0]);
        let right = Matrix::col_vector(&[2.0, 4.0]);
        assert_eq!(left.concat_cols(&right).unwrap(), m);
    }
}
