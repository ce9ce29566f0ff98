//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Operations append nodes to the tape during the forward pass; the tape
//! index order is a topological order by construction, so `backward` replays
//! it once in reverse, accumulating gradients additively across fan-out.
//! A tape is confined to one thread; node values are immutable once written.

use super::{Matrix, NumError};

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug, Clone)]
enum Op {
    /// Trainable parameter; receives a gradient.
    Leaf,
    /// Input treated as a constant; gradients are not tracked through it.
    Constant,
    Matmul(NodeId, NodeId),
    /// out = a * b^T
    MatmulTransposeB(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Hadamard(NodeId, NodeId),
    /// out = a + broadcast of the 1xN row b over a's rows
    AddRowBroadcast(NodeId, NodeId),
    Scale(NodeId, f64),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Relu(NodeId),
    SoftmaxRows(NodeId),
    L2NormRows(NodeId),
    MeanRows(NodeId),
    Sum(NodeId),
    ConcatRows(NodeId, NodeId),
    ConcatCols(NodeId, NodeId),
}

struct Node {
    op: Op,
    value: Matrix,
}

/// Gradients from one backward pass, keyed by node.
///
/// Each call to [`Tape::backward`] returns a fresh map, so gradients can
/// never leak between passes.
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, id: NodeId) -> Option<&Matrix> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }
}

/// Append-only computation graph.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    fn push(&mut self, op: Op, value: Matrix) -> NodeId {
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    /// Trainable leaf.
    pub fn leaf(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, value)
    }

    /// Constant input; no gradient flows into it.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(Op::Matmul(a, b), value))
    }

    pub fn matmul_transpose_b(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).matmul_transpose_b(self.value(b))?;
        Ok(self.push(Op::MatmulTransposeB(a, b), value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(Op::Add(a, b), value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).sub(self.value(b))?;
        Ok(self.push(Op::Sub(a, b), value))
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).hadamard(self.value(b))?;
        Ok(self.push(Op::Hadamard(a, b), value))
    }

    pub fn add_row_broadcast(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).add_row_broadcast(self.value(row))?;
        Ok(self.push(Op::AddRowBroadcast(a, row), value))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let value = self.value(a).scale(factor);
        self.push(Op::Scale(a, factor), value)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), value)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(stable_sigmoid);
        self.push(Op::Sigmoid(a), value)
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).map(f64::exp);
        if !value.is_finite() {
            return Err(NumError::NonFinite { op: "exp" });
        }
        Ok(self.push(Op::Exp(a), value))
    }

    /// Natural log; every entry must be strictly positive.
    pub fn log(&mut self, a: NodeId) -> Result<NodeId, NumError> {
        if self.value(a).data().iter().any(|&v| v <= 0.0) {
            return Err(NumError::NonFinite { op: "log" });
        }
        let value = self.value(a).map(f64::ln);
        Ok(self.push(Op::Log(a), value))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|v| v.max(0.0));
        self.push(Op::Relu(a), value)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).softmax_rows();
        self.push(Op::SoftmaxRows(a), value)
    }

    pub fn l2_normalize_rows(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).l2_normalize_rows();
        self.push(Op::L2NormRows(a), value)
    }

    pub fn mean_rows(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).mean_rows();
        self.push(Op::MeanRows(a), value)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).sum_all();
        self.push(Op::Sum(a), value)
    }

    pub fn concat_rows(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).concat_rows(self.value(b))?;
        Ok(self.push(Op::ConcatRows(a, b), value))
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NumError> {
        let value = self.value(a).concat_cols(self.value(b))?;
        Ok(self.push(Op::ConcatCols(a, b), value))
    }

    /// Stack 1-row nodes into one matrix, top to bottom.
    pub fn stack_rows(&mut self, rows: &[NodeId]) -> Result<NodeId, NumError> {
        let mut acc = rows[0];
        for &r in &rows[1..] {
            acc = self.concat_rows(acc, r)?;
        }
        Ok(acc)
    }

    /// Reverse pass from a scalar output node. Returns the gradient of the
    /// output with respect to every node, accumulated additively across
    /// fan-out. The output must be 1x1.
    pub fn backward(&self, output: NodeId) -> Result<Gradients, NumError> {
        let out_shape = self.value(output).shape();
        if out_shape != (1, 1) {
            return Err(NumError::NonScalarOutput { shape: out_shape });
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[output.0] = Some(Matrix::scalar(1.0));

        for idx in (0..=output.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            self.propagate(idx, &grad, &mut grads)?;
            grads[idx] = Some(grad);
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], id: NodeId, delta: Matrix) {
        // Constants take no gradient; skipping them is the stop-gradient rule.
        if matches!(self.nodes[id.0].op, Op::Constant) {
            return;
        }
        match &mut grads[id.0] {
            Some(g) => {
                debug_assert_eq!(g.shape(), delta.shape());
                for (x, y) in g.data_mut().iter_mut().zip(delta.data()) {
                    *x += y;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(
        &self,
        idx: usize,
        grad: &Matrix,
        grads: &mut [Option<Matrix>],
    ) -> Result<(), NumError> {
        let node = &self.nodes[idx];
        match node.op {
            Op::Leaf | Op::Constant => {}
            Op::Matmul(a, b) => {
                let da = grad.matmul_transpose_b(self.value(b))?;
                let db = transpose_matmul(self.value(a), grad);
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
            Op::MatmulTransposeB(a, b) => {
                // c = a b^T  =>  da = g b, db = g^T a
                let da = grad.matmul(self.value(b))?;
                let db = transpose_matmul(grad, self.value(a));
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
            Op::Add(a, b) => {
                self.accumulate(grads, a, grad.clone());
                self.accumulate(grads, b, grad.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, a, grad.clone());
                self.accumulate(grads, b, grad.scale(-1.0));
            }
            Op::Hadamard(a, b) => {
                let da = grad.hadamard(self.value(b))?;
                let db = grad.hadamard(self.value(a))?;
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
            Op::AddRowBroadcast(a, row) => {
                self.accumulate(grads, a, grad.clone());
                let mut drow = Matrix::zeros(1, grad.cols());
                for r in 0..grad.rows() {
                    for c in 0..grad.cols() {
                        drow.data_mut()[c] += grad.get(r, c);
                    }
                }
                self.accumulate(grads, row, drow);
            }
            Op::Scale(a, factor) => {
                self.accumulate(grads, a, grad.scale(factor));
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let da = elementwise(grad, y, |g, y| g * (1.0 - y * y));
                self.accumulate(grads, a, da);
            }
            Op::Sigmoid(a) => {
                let y = &node.value;
                let da = elementwise(grad, y, |g, y| g * y * (1.0 - y));
                self.accumulate(grads, a, da);
            }
            Op::Exp(a) => {
                let da = grad.hadamard(&node.value)?;
                self.accumulate(grads, a, da);
            }
            Op::Log(a) => {
                let da = elementwise(grad, self.value(a), |g, x| g / x);
                self.accumulate(grads, a, da);
            }
            Op::Relu(a) => {
                let da = elementwise(grad, self.value(a), |g, x| if x > 0.0 { g } else { 0.0 });
                self.accumulate(grads, a, da);
            }
            Op::SoftmaxRows(a) => {
                // dx_ij = y_ij * (g_ij - sum_k g_ik y_ik)
                let y = &node.value;
                let mut da = Matrix::zeros(grad.rows(), grad.cols());
                for r in 0..grad.rows() {
                    let dot: f64 = grad
                        .row(r)
                        .iter()
                        .zip(y.row(r))
                        .map(|(g, yv)| g * yv)
                        .sum();
                    for c in 0..grad.cols() {
                        da.set(r, c, y.get(r, c) * (grad.get(r, c) - dot));
                    }
                }
                self.accumulate(grads, a, da);
            }
            Op::L2NormRows(a) => {
                // y = x / |x|; dx = (g - (g . y) y) / |x|; zero rows stay zero.
                let x = self.value(a);
                let y = &node.value;
                let mut da = Matrix::zeros(grad.rows(), grad.cols());
                for r in 0..grad.rows() {
                    let norm = x.row(r).iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm < 1e-12 {
                        continue;
                    }
                    let dot: f64 = grad
                        .row(r)
                        .iter()
                        .zip(y.row(r))
                        .map(|(g, yv)| g * yv)
                        .sum();
                    for c in 0..grad.cols() {
                        da.set(r, c, (grad.get(r, c) - dot * y.get(r, c)) / norm);
                    }
                }
                self.accumulate(grads, a, da);
            }
            Op::MeanRows(a) => {
                let m = self.value(a).rows() as f64;
                let mut da = Matrix::zeros(self.value(a).rows(), self.value(a).cols());
                for r in 0..da.rows() {
                    for c in 0..da.cols() {
                        da.set(r, c, grad.get(0, c) / m);
                    }
                }
                self.accumulate(grads, a, da);
            }
            Op::Sum(a) => {
                let g = grad.get(0, 0);
                let da = self.value(a).map(|_| g);
                self.accumulate(grads, a, da);
            }
            Op::ConcatRows(a, b) => {
                let (ra, cols) = self.value(a).shape();
                let da = Matrix::from_vec(ra, cols, grad.data()[..ra * cols].to_vec())?;
                let rb = self.value(b).rows();
                let db = Matrix::from_vec(rb, cols, grad.data()[ra * cols..].to_vec())?;
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
            Op::ConcatCols(a, b) => {
                let (rows, ca) = self.value(a).shape();
                let cb = self.value(b).cols();
                let mut da = Matrix::zeros(rows, ca);
                let mut db = Matrix::zeros(rows, cb);
                for r in 0..rows {
                    for c in 0..ca {
                        da.set(r, c, grad.get(r, c));
                    }
                    for c in 0..cb {
                        db.set(r, c, grad.get(r, ca + c));
                    }
                }
                self.accumulate(grads, a, da);
                self.accumulate(grads, b, db);
            }
        }
        Ok(())
    }
}

/// a^T * b computed without materializing the transpose.
fn transpose_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!(a.rows(), b.rows());
    let mut out = Matrix::zeros(a.cols(), b.cols());
    for i in 0..a.rows() {
        let a_row = a.row(i);
        let b_row = b.row(i);
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let o_row = &mut out.data_mut()[k * b_row.len()..(k + 1) * b_row.len()];
            for (o, &bij) in o_row.iter_mut().zip(b_row.iter()) {
                *o += aik * bij;
            }
        }
    }
    out
}

fn elementwise(g: &Matrix, x: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    debug_assert_eq!(g.shape(), x.shape());
    let data = g
        .data()
        .iter()
        .zip(x.data())
        .map(|(&gv, &xv)| f(gv, xv))
        .collect();
    Matrix::from_vec(g.rows(), g.cols(), data).expect("shapes checked")
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::scalar(3.0));
        let grads = tape.backward(x).unwrap();
        assert_eq!(grads.get(x).unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn square_sum_gradient() {
        // f(x) = sum(x . x), x = [1, 2] -> grad [2, 4]
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::row_vector(&[1.0, 2.0]));
        let sq = tape.hadamard(x, x).unwrap();
        let loss = tape.sum(sq);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0]);
    }

    #[test]
    fn non_scalar_output_rejected() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::row_vector(&[1.0, 2.0]));
        assert!(matches!(
            tape.backward(x),
            Err(NumError::NonScalarOutput { .. })
        ));
    }

    #[test]
    fn fanout_accumulates() {
        // f(x) = sum(x + x) -> grad 2 per entry
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::row_vector(&[1.0, -1.0]));
        let y = tape.add(x, x).unwrap();
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn constants_take_no_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::scalar(2.0));
        let c = tape.constant(Matrix::scalar(5.0));
        let y = tape.hadamard(x, c).unwrap();
        let loss = tape.sum(y);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(x).unwrap().get(0, 0), 5.0);
        assert!(grads.get(c).is_none());
    }

    #[test]
    fn log_rejects_nonpositive() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::row_vector(&[1.0, 0.0]));
        assert!(tape.log(x).is_err());
    }

    #[test]
    fn fresh_gradients_each_backward() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::scalar(4.0));
        let y = tape.hadamard(x, x).unwrap();
        let loss = tape.sum(y);
        let g1 = tape.backward(loss).unwrap();
        let g2 = tape.backward(loss).unwrap();
        assert_eq!(g1.get(x).unwrap().data(), g2.get(x).unwrap().data());
        assert_eq!(g1.get(x).unwrap().get(0, 0), 8.0);
    }
}
