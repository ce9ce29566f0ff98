//! Self-attention LSTM encoder producing L2-normalized session embeddings,
//! plus a two-class linear head on top of them.
//!
//! A session's flat numeric features become a sequence (one feature per
//! timestep), each scalar token projected into a learned space with a
//! per-step positional embedding. The LSTM runs over the sequence, scaled
//! dot-product self-attention mixes the hidden states, the attended states
//! are mean-pooled, projected to the embedding dimension, and normalized to
//! unit length so cosine similarity equals the dot product.
//!
//! The same tape builders drive both training (gradients) and inference
//! (values only), so the two paths cannot drift apart.

mod checkpoint;

use crate::numcore::{Matrix, NodeId, NumError, Rng, Tape};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} features, got {got}")]
    FeatureCount { expected: usize, got: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// How flat features are turned into a sequence. Only one strategy exists:
/// each feature becomes one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeqStrategy {
    #[default]
    FeatureAsSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub seq_strategy: SeqStrategy,
    pub token_proj_dim: usize,
    pub lstm_hidden: usize,
    pub attention_heads: usize,
    pub embed_dim: usize,
    pub head_classes: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            input_dim: 10,
            seq_strategy: SeqStrategy::FeatureAsSteps,
            token_proj_dim: 8,
            lstm_hidden: 64,
            attention_heads: 1,
            embed_dim: 32,
            head_classes: 2,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncoderError> {
        let dims = [
            ("input_dim", self.input_dim),
            ("token_proj_dim", self.token_proj_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("attention_heads", self.attention_heads),
            ("embed_dim", self.embed_dim),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(EncoderError::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if self.head_classes != 2 {
            return Err(EncoderError::InvalidConfig(
                "head_classes is fixed at 2".into(),
            ));
        }
        if self.lstm_hidden % self.attention_heads != 0 {
            return Err(EncoderError::InvalidConfig(format!(
                "lstm_hidden {} not divisible by attention_heads {}",
                self.lstm_hidden, self.attention_heads
            )));
        }
        Ok(())
    }

    fn head_dim(&self) -> usize {
        self.lstm_hidden / self.attention_heads
    }
}

/// Unit-norm session embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    /// Wrap a vector, checking the unit-norm invariant.
    pub fn new(values: Vec<f64>) -> Result<Self, EncoderError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(EncoderError::InvalidConfig(format!(
                "embedding norm {norm} is not within 1e-9 of 1"
            )));
        }
        Ok(Embedding { values })
    }

    fn from_normalized(values: Vec<f64>) -> Self {
        Embedding { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// All encoder parameters. Immutable during inference; training mutates a
/// private copy through [`EncoderState::params_mut`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub config: EncoderConfig,
    w_tok: Matrix,
    pos_emb: Matrix,
    w_xi: Matrix,
    w_hi: Matrix,
    b_i: Matrix,
    w_xf: Matrix,
    w_hf: Matrix,
    b_f: Matrix,
    w_xg: Matrix,
    w_hg: Matrix,
    b_g: Matrix,
    w_xo: Matrix,
    w_ho: Matrix,
    b_o: Matrix,
    attn: Vec<AttnHead>,
    w_out: Matrix,
    b_out: Matrix,
    w_head: Matrix,
    b_head: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
struct AttnHead {
    w_q: Matrix,
    w_k: Matrix,
    w_v: Matrix,
}

/// Xavier-uniform bound for a rows x cols weight.
fn xavier(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

fn draw(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let a = xavier(rows, cols);
    let data = (0..rows * cols).map(|_| rng.uniform(-a, a)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized to fit")
}

impl EncoderState {
    /// Fresh state with Xavier-uniform weights and forget-gate bias 1.0,
    /// drawn in checkpoint order from a single seeded stream.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self, EncoderError> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let (d, p, h, e) = (
            config.input_dim,
            config.token_proj_dim,
            config.lstm_hidden,
            config.embed_dim,
        );
        let w_tok = draw(&mut rng, d, p);
        // Positional embeddings start small so the constant (input
        // independent) component does not dominate the pooled state.
        let pos_emb = draw(&mut rng, d, p).scale(0.1);
        let w_xi = draw(&mut rng, p, h);
        let w_hi = draw(&mut rng, h, h);
        let b_i = Matrix::zeros(1, h);
        let w_xf = draw(&mut rng, p, h);
        let w_hf = draw(&mut rng, h, h);
        let b_f = Matrix::from_vec(1, h, vec![1.0; h]).expect("sized to fit");
        let w_xg = draw(&mut rng, p, h);
        let w_hg = draw(&mut rng, h, h);
        let b_g = Matrix::zeros(1, h);
        let w_xo = draw(&mut rng, p, h);
        let w_ho = draw(&mut rng, h, h);
        let b_o = Matrix::zeros(1, h);
        let dk = config.head_dim();
        let attn = (0..config.attention_heads)
            .map(|_| AttnHead {
                w_q: draw(&mut rng, h, dk),
                w_k: draw(&mut rng, h, dk),
                w_v: draw(&mut rng, h, dk),
            })
            .collect();
        let w_out = draw(&mut rng, h, e);
        let b_out = Matrix::zeros(1, e);
        let w_head = draw(&mut rng, e, 2);
        let b_head = Matrix::zeros(1, 2);
        Ok(EncoderState {
            config,
            w_tok,
            pos_emb,
            w_xi,
            w_hi,
            b_i,
            w_xf,
            w_hf,
            b_f,
            w_xg,
            w_hg,
            b_g,
            w_xo,
            w_ho,
            b_o,
            attn,
            w_out,
            b_out,
            w_head,
            b_head,
        })
    }

    /// Parameters in checkpoint order.
    pub fn params(&self) -> Vec<&Matrix> {
        let mut out = vec![
            &self.w_tok, &self.pos_emb, &self.w_xi, &self.w_hi, &self.b_i, &self.w_xf, &self.w_hf,
            &self.b_f, &self.w_xg, &self.w_hg, &self.b_g, &self.w_xo, &self.w_ho, &self.b_o,
        ];
        for head in &self.attn {
            out.push(&head.w_q);
            out.push(&head.w_k);
            out.push(&head.w_v);
        }
        out.push(&self.w_out);
        out.push(&self.b_out);
        out.push(&self.w_head);
        out.push(&self.b_head);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = vec![
            &mut self.w_tok,
            &mut self.pos_emb,
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.b_i,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.b_f,
            &mut self.w_xg,
            &mut self.w_hg,
            &mut self.b_g,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.b_o,
        ];
        for head in &mut self.attn {
            out.push(&mut head.w_q);
            out.push(&mut head.w_k);
            out.push(&mut head.w_v);
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out.push(&mut self.w_head);
        out.push(&mut self.b_head);
        out
    }

    /// Number of parameter matrices (head projections included).
    pub fn param_count(&self) -> usize {
        18 + 3 * self.attn.len()
    }

    /// Indices into [`EncoderState::params`] of the classification head,
    /// which stage 2 freezes.
    pub fn head_param_indices(&self) -> [usize; 2] {
        let n = self.param_count();
        [n - 2, n - 1]
    }

    /// Register every parameter as a trainable leaf on a tape.
    pub fn leaves(&self, tape: &mut Tape) -> TapeParams {
        let ordered: Vec<NodeId> = self.params().iter().map(|m| tape.leaf((*m).clone())).collect();
        TapeParams::from_ordered(self.config.clone(), ordered)
    }

    /// Register every parameter as a constant (inference only).
    fn constants(&self, tape: &mut Tape) -> TapeParams {
        let ordered: Vec<NodeId> = self
            .params()
            .iter()
            .map(|m| tape.constant((*m).clone()))
            .collect();
        TapeParams::from_ordered(self.config.clone(), ordered)
    }

    /// Projected token sequence for one sample: one row per timestep.
    pub fn project_tokens(&self, features: &[f64]) -> Result<Matrix, EncoderError> {
        self.check_features(features)?;
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let feats = tape.constant(Matrix::row_vector(features));
        let steps = project_tokens_node(&mut tape, &params, feats)?;
        let stacked = tape.stack_rows(&steps)?;
        Ok(tape.value(stacked).clone())
    }

    /// Standard LSTM recurrence over a T x proj token matrix; returns all T
    /// hidden states as rows.
    pub fn lstm_forward(&self, tokens: &Matrix) -> Result<Matrix, EncoderError> {
        if tokens.cols() != self.config.token_proj_dim || tokens.rows() == 0 {
            return Err(EncoderError::Num(NumError::ShapeMismatch {
                op: "lstm_forward",
                lhs: tokens.shape(),
                rhs: (1, self.config.token_proj_dim),
            }));
        }
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let steps: Vec<NodeId> = (0..tokens.rows())
            .map(|t| tape.constant(Matrix::row_vector(tokens.row(t))))
            .collect();
        let hidden = lstm_node(&mut tape, &params, &steps)?;
        let stacked = tape.stack_rows(&hidden)?;
        Ok(tape.value(stacked).clone())
    }

    /// Scaled dot-product self-attention over hidden states (rows are
    /// timesteps).
    pub fn self_attention(&self, hidden: &Matrix) -> Result<Matrix, EncoderError> {
        if hidden.cols() != self.config.lstm_hidden || hidden.rows() == 0 {
            return Err(EncoderError::Num(NumError::ShapeMismatch {
                op: "self_attention",
                lhs: hidden.shape(),
                rhs: (1, self.config.lstm_hidden),
            }));
        }
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let h = tape.constant(hidden.clone());
        let ctx = attention_node(&mut tape, &params, h)?;
        Ok(tape.value(ctx).clone())
    }

    /// Final projection of a pooled 1 x hidden state into a unit embedding.
    pub fn output_projection(&self, pooled: &Matrix) -> Result<Embedding, EncoderError> {
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let p = tape.constant(pooled.clone());
        let raw = tape.matmul(p, params.w_out)?;
        let raw = tape.add(raw, params.b_out)?;
        let z = tape.l2_normalize_rows(raw);
        Ok(Embedding::from_normalized(tape.value(z).data().to_vec()))
    }

    /// Full pipeline: tokenize, project, LSTM, self-attention, mean-pool,
    /// project, normalize.
    pub fn encode(&self, features: &[f64]) -> Result<Embedding, EncoderError> {
        self.check_features(features)?;
        let z = self.encode_all(&Matrix::row_vector(features))?;
        Ok(Embedding::from_normalized(z.row(0).to_vec()))
    }

    /// Batched encode: one embedding row per input row.
    pub fn encode_all(&self, features: &Matrix) -> Result<Matrix, EncoderError> {
        if features.cols() != self.config.input_dim {
            return Err(EncoderError::FeatureCount {
                expected: self.config.input_dim,
                got: features.cols(),
            });
        }
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let feats = tape.constant(features.clone());
        let z = encode_batch_node(&mut tape, &params, feats)?;
        Ok(tape.value(z).clone())
    }

    /// Class probabilities (index 1 is the positive class).
    pub fn head_probs(&self, z: &Embedding) -> Result<[f64; 2], EncoderError> {
        let probs = self.head_probs_all(&Matrix::row_vector(z.as_slice()))?;
        Ok([probs.get(0, 0), probs.get(0, 1)])
    }

    /// Head probabilities for a batch of embeddings (rows).
    pub fn head_probs_all(&self, z: &Matrix) -> Result<Matrix, EncoderError> {
        let mut tape = Tape::new();
        let params = self.constants(&mut tape);
        let zc = tape.constant(z.clone());
        let probs = head_probs_node(&mut tape, &params, zc)?;
        Ok(tape.value(probs).clone())
    }

    fn check_features(&self, features: &[f64]) -> Result<(), EncoderError> {
        if features.len() != self.config.input_dim {
            return Err(EncoderError::FeatureCount {
                expected: self.config.input_dim,
                got: features.len(),
            });
        }
        Ok(())
    }
}

/// Node handles for every encoder parameter on a tape, in checkpoint order.
pub struct TapeParams {
    pub config: EncoderConfig,
    pub ordered: Vec<NodeId>,
    pub w_tok: NodeId,
    pub pos_emb: NodeId,
    pub w_xi: NodeId,
    pub w_hi: NodeId,
    pub b_i: NodeId,
    pub w_xf: NodeId,
    pub w_hf: NodeId,
    pub b_f: NodeId,
    pub w_xg: NodeId,
    pub w_hg: NodeId,
    pub b_g: NodeId,
    pub w_xo: NodeId,
    pub w_ho: NodeId,
    pub b_o: NodeId,
    pub attn: Vec<(NodeId, NodeId, NodeId)>,
    pub w_out: NodeId,
    pub b_out: NodeId,
    pub w_head: NodeId,
    pub b_head: NodeId,
}

impl TapeParams {
    /// Reassemble named handles from the checkpoint-ordered id list.
    pub fn from_ordered(config: EncoderConfig, ordered: Vec<NodeId>) -> Self {
        assert_eq!(ordered.len(), 18 + 3 * config.attention_heads);
        let attn = (0..config.attention_heads)
            .map(|h| (ordered[14 + 3 * h], ordered[15 + 3 * h], ordered[16 + 3 * h]))
            .collect();
        let tail = 14 + 3 * config.attention_heads;
        TapeParams {
            w_tok: ordered[0],
            pos_emb: ordered[1],
            w_xi: ordered[2],
            w_hi: ordered[3],
            b_i: ordered[4],
            w_xf: ordered[5],
            w_hf: ordered[6],
            b_f: ordered[7],
            w_xg: ordered[8],
            w_hg: ordered[9],
            b_g: ordered[10],
            w_xo: ordered[11],
            w_ho: ordered[12],
            b_o: ordered[13],
            attn,
            w_out: ordered[tail],
            b_out: ordered[tail + 1],
            w_head: ordered[tail + 2],
            b_head: ordered[tail + 3],
            config,
            ordered,
        }
    }
}

/// Projected tokens per timestep for a batch: feature t of every sample
/// scaled into that step's learned direction (row t of the projection
/// matrix), shifted by the step's positional embedding.
pub fn project_tokens_node(
    tape: &mut Tape,
    p: &TapeParams,
    features: NodeId,
) -> Result<Vec<NodeId>, NumError> {
    let d = p.config.input_dim;
    let mut steps = Vec::with_capacity(d);
    for t in 0..d {
        let col = tape.constant(Matrix::one_hot_col(d, t));
        let tok = tape.matmul(features, col)?; // B x 1
        let pick = tape.constant(Matrix::one_hot_row(d, t));
        let dir = tape.matmul(pick, p.w_tok)?; // 1 x proj
        let proj = tape.matmul(tok, dir)?; // B x proj
        let pos = tape.matmul(pick, p.pos_emb)?; // 1 x proj
        steps.push(tape.add_row_broadcast(proj, pos)?);
    }
    Ok(steps)
}

/// LSTM recurrence over per-step token batches. Returns one B x hidden node
/// per timestep.
pub fn lstm_node(
    tape: &mut Tape,
    p: &TapeParams,
    steps: &[NodeId],
) -> Result<Vec<NodeId>, NumError> {
    let batch = tape.value(steps[0]).rows();
    let h = p.config.lstm_hidden;
    let mut h_prev = tape.constant(Matrix::zeros(batch, h));
    let mut c_prev = tape.constant(Matrix::zeros(batch, h));
    let mut hidden = Vec::with_capacity(steps.len());
    for &x in steps {
        let gate = |tape: &mut Tape, wx, wh, b| -> Result<NodeId, NumError> {
            let a = tape.matmul(x, wx)?;
            let r = tape.matmul(h_prev, wh)?;
            let s = tape.add(a, r)?;
            tape.add_row_broadcast(s, b)
        };
        let i_pre = gate(tape, p.w_xi, p.w_hi, p.b_i)?;
        let i = tape.sigmoid(i_pre);
        let f_pre = gate(tape, p.w_xf, p.w_hf, p.b_f)?;
        let f = tape.sigmoid(f_pre);
        let g_pre = gate(tape, p.w_xg, p.w_hg, p.b_g)?;
        let g = tape.tanh(g_pre);
        let o_pre = gate(tape, p.w_xo, p.w_ho, p.b_o)?;
        let o = tape.sigmoid(o_pre);
        let keep = tape.hadamard(f, c_prev)?;
        let write = tape.hadamard(i, g)?;
        let c = tape.add(keep, write)?;
        let c_act = tape.tanh(c);
        let h_t = tape.hadamard(o, c_act)?;
        hidden.push(h_t);
        h_prev = h_t;
        c_prev = c;
    }
    Ok(hidden)
}

/// Scaled dot-product self-attention over one sample's T x hidden states,
/// one projection triple per head, heads concatenated along columns.
pub fn attention_node(tape: &mut Tape, p: &TapeParams, h: NodeId) -> Result<NodeId, NumError> {
    let scale = 1.0 / (p.config.head_dim() as f64).sqrt();
    let mut heads = Vec::with_capacity(p.attn.len());
    for &(w_q, w_k, w_v) in &p.attn {
        let q = tape.matmul(h, w_q)?;
        let k = tape.matmul(h, w_k)?;
        let v = tape.matmul(h, w_v)?;
        let scores_raw = tape.matmul_transpose_b(q, k)?;
        let scores = tape.scale(scores_raw, scale);
        let weights = tape.softmax_rows(scores);
        heads.push(tape.matmul(weights, v)?);
    }
    let mut ctx = heads[0];
    for &head in &heads[1..] {
        ctx = tape.concat_cols(ctx, head)?;
    }
    Ok(ctx)
}

/// Full encode pipeline for a batch of feature rows; returns the B x embed
/// matrix of unit-norm embeddings.
pub fn encode_batch_node(
    tape: &mut Tape,
    p: &TapeParams,
    features: NodeId,
) -> Result<NodeId, NumError> {
    let batch = tape.value(features).rows();
    let steps = project_tokens_node(tape, p, features)?;
    let hidden = lstm_node(tape, p, &steps)?;
    let mut z_rows = Vec::with_capacity(batch);
    for s in 0..batch {
        let pick = tape.constant(Matrix::one_hot_row(batch, s));
        let rows: Vec<NodeId> = hidden
            .iter()
            .map(|&h_t| tape.matmul(pick, h_t))
            .collect::<Result<_, _>>()?;
        let h_seq = tape.stack_rows(&rows)?;
        let ctx = attention_node(tape, p, h_seq)?;
        let pooled = tape.mean_rows(ctx);
        let raw = tape.matmul(pooled, p.w_out)?;
        let raw = tape.add(raw, p.b_out)?;
        z_rows.push(tape.l2_normalize_rows(raw));
    }
    tape.stack_rows(&z_rows)
}

/// Softmax head over embeddings; index 1 is the positive class.
pub fn head_probs_node(tape: &mut Tape, p: &TapeParams, z: NodeId) -> Result<NodeId, NumError> {
    let logits = tape.matmul(z, p.w_head)?;
    let logits = tape.add_row_broadcast(logits, p.b_head)?;
    Ok(tape.softmax_rows(logits))
}
