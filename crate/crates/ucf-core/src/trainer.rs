//! Two-stage encoder optimization.
//!
//! Stage 1 runs the contrastive PU objective plus a supervised head term
//! (PU targets: labeled slots 1, unlabeled slots 0) with Adam. Stage 2
//! freezes the head, mines pseudo-negatives from the head's least-positive
//! unlabeled samples each epoch, and refines the encoder with a squared
//! Euclidean triplet margin loss over (labeled, labeled, pseudo-negative)
//! triples. Every batch seed derives from the run seed and a position label,
//! so runs are bit-reproducible.

use std::time::Instant;

use crate::conpu::{
    self, adaptive_tau, direction_v0, raw_tau, ContrastiveBatch, ConpuError, LossVariant,
    TauParams,
};
use crate::datagen::{fmt_f64, Dataset};
use crate::encoder::{encode_batch_node, head_probs_node, Embedding, EncoderError, EncoderState};
use crate::numcore::{derive_seed, Matrix, NumError, Rng, Tape};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("stage {stage} epoch {epoch} batch {batch}: loss is not finite")]
    NanLoss {
        stage: u8,
        epoch: usize,
        batch: usize,
    },
    #[error("dataset has no unlabeled samples to mine")]
    NoUnlabeled,
    #[error("stage 2 needs at least 2 labeled positives, found {0}")]
    TooFewPositives(usize),
    #[error(transparent)]
    Conpu(#[from] ConpuError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Num(#[from] NumError),
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_r: usize,
    pub aux_m: usize,
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub triplet_margin: f64,
    pub pseudo_negative_quantile: f64,
    pub head_loss_weight: f64,
    pub seed: u64,
    pub loss_variant: LossVariant,
    pub tau: TauParams,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-4,
            batch_r: 32,
            aux_m: 16,
            stage1_epochs: 20,
            stage2_epochs: 20,
            triplet_margin: 1.0,
            pseudo_negative_quantile: 0.2,
            head_loss_weight: 1.0,
            seed: 0,
            loss_variant: LossVariant::MeanWeighted,
            tau: TauParams::default(),
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.lr <= 0.0 {
            return Err(TrainError::InvalidConfig("lr must be > 0".into()));
        }
        if self.batch_r < 2 || self.aux_m < 2 {
            return Err(TrainError::InvalidConfig(
                "batch_r and aux_m must be >= 2".into(),
            ));
        }
        if !(0.0 < self.pseudo_negative_quantile && self.pseudo_negative_quantile < 1.0) {
            return Err(TrainError::InvalidConfig(
                "pseudo_negative_quantile must lie in (0, 1)".into(),
            ));
        }
        if self.triplet_margin <= 0.0 {
            return Err(TrainError::InvalidConfig("triplet_margin must be > 0".into()));
        }
        Ok(())
    }
}

/// One per-epoch diagnostic record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub stage: u8,
    pub epoch: usize,
    pub mean_loss: f64,
    /// Unclamped adaptive temperature, mean over batches (0 in stage 2).
    pub raw_tau: f64,
    /// Norm of the direction diagnostic, mean over batches (0 in stage 2).
    pub v0_norm: f64,
    /// Head accuracy on the labeled positives at epoch end.
    pub head_acc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn extend(&mut self, other: TrainLog) {
        self.records.extend(other.records);
    }

    /// CSV with the fixed header and 17-significant-digit floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,epoch,mean_loss,raw_tau,v0_norm,head_acc,seconds\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.stage,
                r.epoch,
                fmt_f64(r.mean_loss),
                fmt_f64(r.raw_tau),
                fmt_f64(r.v0_norm),
                fmt_f64(r.head_acc),
                fmt_f64(r.seconds),
            ));
        }
        out
    }
}

/// Adam over the encoder's parameter list.
struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
}

impl Adam {
    fn new(cfg: &TrainConfig, params: &[&Matrix]) -> Self {
        Adam {
            lr: cfg.lr,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            t: 0,
            m: params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
            v: params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect(),
        }
    }

    /// One update. `grads[i] = None` leaves parameter i untouched by the
    /// gradient but still advances its bias correction uniformly.
    fn step(&mut self, params: &mut [&mut Matrix], grads: &[Option<&Matrix>], frozen: &[usize]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, param) in params.iter_mut().enumerate() {
            if frozen.contains(&i) {
                continue;
            }
            let Some(grad) = grads[i] else { continue };
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let p = param.data_mut();
            for j in 0..p.len() {
                let g = grad.data()[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Head accuracy over the labeled positives (fraction voted positive).
pub fn head_accuracy(dataset: &Dataset, encoder: &EncoderState) -> Result<f64, TrainError> {
    let labeled = dataset.labeled_positive_indices();
    if labeled.is_empty() {
        return Ok(0.0);
    }
    let probs = head_probs_for(dataset, encoder, &labeled)?;
    let hits = probs.iter().filter(|&&p| p >= 0.5).count();
    Ok(hits as f64 / labeled.len() as f64)
}

/// Positive-class head probability for the given samples, batched.
fn head_probs_for(
    dataset: &Dataset,
    encoder: &EncoderState,
    indices: &[usize],
) -> Result<Vec<f64>, TrainError> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(256) {
        let feats = dataset.features_matrix(chunk);
        let z = encoder.encode_all(&feats)?;
        let probs = encoder.head_probs_all(&z)?;
        for r in 0..probs.rows() {
            out.push(probs.get(r, 1));
        }
    }
    Ok(out)
}

/// Stage 1: contrastive PU training of encoder and head.
pub fn train_stage1(
    dataset: &Dataset,
    encoder: &EncoderState,
    cfg: &TrainConfig,
) -> Result<(EncoderState, TrainLog), TrainError> {
    cfg.validate()?;
    let mut state = encoder.clone();
    let mut log = TrainLog::default();
    if cfg.stage1_epochs == 0 {
        return Ok((state, log));
    }
    let mut adam = Adam::new(cfg, &state.params());
    let batches = dataset.len().div_ceil(cfg.batch_r);

    for epoch in 1..=cfg.stage1_epochs {
        let started = Instant::now();
        let mut loss_sum = 0.0;
        let mut raw_tau_sum = 0.0;
        let mut v0_norm_sum = 0.0;

        for b in 0..batches {
            let seed = derive_seed(cfg.seed, &format!("stage1/epoch{epoch}/batch{b}"));
            let (s, s_aux) = conpu::sample_batches(dataset, cfg.batch_r, cfg.aux_m, seed)?;

            let mut tape = Tape::new();
            let params = state.leaves(&mut tape);
            let slots: Vec<usize> = s.iter().chain(&s_aux).copied().collect();
            let feats = tape.constant(dataset.features_matrix(&slots));
            let z = encode_batch_node(&mut tape, &params, feats)?;
            let probs = head_probs_node(&mut tape, &params, z)?;

            let batch = ContrastiveBatch::assemble(
                dataset,
                s,
                s_aux,
                tape.value(z).clone(),
                tape.value(probs).clone(),
            )?;

            let v_d = batch.mean_training_embedding();
            let v_1 = batch.mean_auxiliary_embedding();
            raw_tau_sum += raw_tau(&v_d, epoch)?;
            let tau = adaptive_tau(&v_d, epoch, &cfg.tau)?;
            let v0 = direction_v0(&v_d, &v_1, &cfg.tau)?;
            v0_norm_sum += v0.iter().map(|v| v * v).sum::<f64>().sqrt();

            let contrastive = conpu::conpu_loss(&mut tape, z, &batch, tau, cfg.loss_variant)?;
            // Head supervision covers the R training slots; the auxiliary
            // slots are set material, not supervision targets.
            let bce = head_bce_node(&mut tape, probs, &batch.labeled[..batch.s.len()])?;
            let weighted_bce = tape.scale(bce, cfg.head_loss_weight);
            let total = tape.add(contrastive, weighted_bce)?;

            let contrastive_value = tape.value(contrastive).get(0, 0);
            let total_value = tape.value(total).get(0, 0);
            if !total_value.is_finite() {
                return Err(TrainError::NanLoss {
                    stage: 1,
                    epoch,
                    batch: b,
                });
            }
            loss_sum += contrastive_value;

            let grads = tape.backward(total)?;
            let grad_refs: Vec<Option<&Matrix>> =
                params.ordered.iter().map(|&id| grads.get(id)).collect();
            adam.step(&mut state.params_mut(), &grad_refs, &[]);
        }

        log.records.push(EpochRecord {
            stage: 1,
            epoch,
            mean_loss: loss_sum / batches as f64,
            raw_tau: raw_tau_sum / batches as f64,
            v0_norm: v0_norm_sum / batches as f64,
            head_acc: head_accuracy(dataset, &state)?,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((state, log))
}

/// Binary cross-entropy of the head over the first `labeled.len()` slot
/// rows of `probs`: target 1 for labeled slots, 0 for unlabeled slots.
/// Remaining rows (the auxiliary slots) are masked out.
fn head_bce_node(
    tape: &mut Tape,
    probs: crate::numcore::NodeId,
    labeled: &[bool],
) -> Result<crate::numcore::NodeId, NumError> {
    let rows = tape.value(probs).rows();
    let n = labeled.len();
    let mut mask = Matrix::zeros(rows, 2);
    for (i, &lab) in labeled.iter().enumerate() {
        mask.set(i, if lab { 1 } else { 0 }, 1.0);
    }
    let mask = tape.constant(mask);
    let logp = tape.log(probs)?;
    let picked = tape.hadamard(logp, mask)?;
    let sum = tape.sum(picked);
    Ok(tape.scale(sum, -1.0 / n as f64))
}

/// Unlabeled samples whose positive-class head probability falls in the
/// lowest `q`-quantile; ties break toward the lower sample index.
pub fn build_pseudo_negatives(
    dataset: &Dataset,
    encoder: &EncoderState,
    q: f64,
) -> Result<Vec<usize>, TrainError> {
    if !(0.0 < q && q < 1.0) {
        return Err(TrainError::InvalidConfig(
            "pseudo-negative quantile must lie in (0, 1)".into(),
        ));
    }
    let unlabeled = dataset.unlabeled_indices();
    if unlabeled.is_empty() {
        return Err(TrainError::NoUnlabeled);
    }
    let probs = head_probs_for(dataset, encoder, &unlabeled)?;
    let mut order: Vec<(f64, usize)> = probs.into_iter().zip(unlabeled).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let count = ((q * order.len() as f64).ceil() as usize).max(1);
    Ok(order.into_iter().take(count).map(|(_, i)| i).collect())
}

/// Squared-Euclidean triplet margin loss on unit embeddings.
pub fn triplet_loss(a: &Embedding, p: &Embedding, n: &Embedding, margin: f64) -> f64 {
    let d = |x: &Embedding, y: &Embedding| -> f64 {
        x.as_slice()
            .iter()
            .zip(y.as_slice())
            .map(|(u, v)| (u - v) * (u - v))
            .sum()
    };
    (margin + d(a, p) - d(a, n)).max(0.0)
}

/// Stage 2: triplet refinement against per-epoch re-mined pseudo-negatives.
/// The classification head is frozen.
pub fn train_stage2(
    dataset: &Dataset,
    encoder: &EncoderState,
    cfg: &TrainConfig,
) -> Result<(EncoderState, TrainLog), TrainError> {
    cfg.validate()?;
    let labeled = dataset.labeled_positive_indices();
    if labeled.len() < 2 {
        return Err(TrainError::TooFewPositives(labeled.len()));
    }
    let mut state = encoder.clone();
    let mut log = TrainLog::default();
    if cfg.stage2_epochs == 0 {
        return Ok((state, log));
    }
    let mut adam = Adam::new(cfg, &state.params());
    let frozen = state.head_param_indices().to_vec();
    let steps = labeled.len().div_ceil(cfg.batch_r);
    let r = cfg.batch_r;

    for epoch in 1..=cfg.stage2_epochs {
        let started = Instant::now();
        let negatives =
            build_pseudo_negatives(dataset, &state, cfg.pseudo_negative_quantile)?;
        let mut loss_sum = 0.0;

        for step in 0..steps {
            let seed = derive_seed(cfg.seed, &format!("stage2/epoch{epoch}/step{step}"));
            let mut rng = Rng::new(seed);
            let mut anchors = Vec::with_capacity(r);
            let mut positives = Vec::with_capacity(r);
            let mut negs = Vec::with_capacity(r);
            for _ in 0..r {
                let a_pos = rng.next_index(labeled.len());
                anchors.push(labeled[a_pos]);
                // Uniform over the labeled set minus the anchor.
                let mut p_pos = rng.next_index(labeled.len() - 1);
                if p_pos >= a_pos {
                    p_pos += 1;
                }
                positives.push(labeled[p_pos]);
                negs.push(negatives[rng.next_index(negatives.len())]);
            }

            let mut tape = Tape::new();
            let params = state.leaves(&mut tape);
            let all: Vec<usize> = anchors
                .iter()
                .chain(&positives)
                .chain(&negs)
                .copied()
                .collect();
            let feats = tape.constant(dataset.features_matrix(&all));
            let z = encode_batch_node(&mut tape, &params, feats)?;

            // Row selectors split Z into the three triplet roles.
            let mut sel_a = Matrix::zeros(r, 3 * r);
            let mut sel_p = Matrix::zeros(r, 3 * r);
            let mut sel_n = Matrix::zeros(r, 3 * r);
            for i in 0..r {
                sel_a.set(i, i, 1.0);
                sel_p.set(i, r + i, 1.0);
                sel_n.set(i, 2 * r + i, 1.0);
            }
            let sel_a = tape.constant(sel_a);
            let sel_p = tape.constant(sel_p);
            let sel_n = tape.constant(sel_n);
            let z_a = tape.matmul(sel_a, z)?;
            let z_p = tape.matmul(sel_p, z)?;
            let z_n = tape.matmul(sel_n, z)?;

            let embed = tape.value(z).cols();
            let ones = tape.constant(Matrix::from_vec(embed, 1, vec![1.0; embed]).unwrap());
            let diff_p = tape.sub(z_a, z_p)?;
            let sq_p = tape.hadamard(diff_p, diff_p)?;
            let d_ap = tape.matmul(sq_p, ones)?;
            let diff_n = tape.sub(z_a, z_n)?;
            let sq_n = tape.hadamard(diff_n, diff_n)?;
            let d_an = tape.matmul(sq_n, ones)?;

            let margin = tape.constant(Matrix::from_vec(r, 1, vec![cfg.triplet_margin; r]).unwrap());
            let gap = tape.sub(d_ap, d_an)?;
            let pre = tape.add(gap, margin)?;
            let hinge = tape.relu(pre);
            let total = tape.sum(hinge);
            let loss = tape.scale(total, 1.0 / r as f64);

            let loss_value = tape.value(loss).get(0, 0);
            if !loss_value.is_finite() {
                return Err(TrainError::NanLoss {
                    stage: 2,
                    epoch,
                    batch: step,
                });
            }
            loss_sum += loss_value;

            let grads = tape.backward(loss)?;
            let grad_refs: Vec<Option<&Matrix>> =
                params.ordered.iter().map(|&id| grads.get(id)).collect();
            adam.step(&mut state.params_mut(), &grad_refs, &frozen);
        }

        log.records.push(EpochRecord {
            stage: 2,
            epoch,
            mean_loss: loss_sum / steps as f64,
            raw_tau: 0.0,
            v0_norm: 0.0,
            head_acc: head_accuracy(dataset, &state)?,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((state, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GenConfig};
    use crate::encoder::EncoderConfig;

    fn tiny_dataset() -> Dataset {
        generate(&GenConfig {
            n_total: 60,
            n_labeled_positive: 12,
            val_fraction: 0.0,
            val_positive_prevalence: 0.0,
            ..GenConfig::default()
        })
        .unwrap()
    }

    fn tiny_encoder() -> EncoderState {
        EncoderState::init(
            EncoderConfig {
                input_dim: 10,
                token_proj_dim: 3,
                lstm_hidden: 4,
                attention_heads: 1,
                embed_dim: 4,
                ..EncoderConfig::default()
            },
            0,
        )
        .unwrap()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            lr: 1e-3,
            batch_r: 8,
            aux_m: 4,
            stage1_epochs: 2,
            stage2_epochs: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = TrainConfig {
            stage1_epochs: 0,
            stage2_epochs: 0,
            ..tiny_config()
        };
        let (out1, log1) = train_stage1(&ds, &enc, &cfg).unwrap();
        assert_eq!(out1, enc);
        assert!(log1.records.is_empty());
        let (out2, log2) = train_stage2(&ds, &enc, &cfg).unwrap();
        assert_eq!(out2, enc);
        assert!(log2.records.is_empty());
    }

    #[test]
    fn stage1_deterministic_under_seed() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = tiny_config();
        let (a, log_a) = train_stage1(&ds, &enc, &cfg).unwrap();
        let (b, log_b) = train_stage1(&ds, &enc, &cfg).unwrap();
        assert_eq!(a, b);
        for (ra, rb) in log_a.records.iter().zip(&log_b.records) {
            assert_eq!(ra.mean_loss.to_bits(), rb.mean_loss.to_bits());
            assert_eq!(ra.raw_tau.to_bits(), rb.raw_tau.to_bits());
            assert_eq!(ra.v0_norm.to_bits(), rb.v0_norm.to_bits());
        }
    }

    #[test]
    fn stage2_deterministic_and_loss_finite() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = tiny_config();
        let (s1, _) = train_stage1(&ds, &enc, &cfg).unwrap();
        let (a, log_a) = train_stage2(&ds, &s1, &cfg).unwrap();
        let (b, _) = train_stage2(&ds, &s1, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(log_a.records.iter().all(|r| r.mean_loss.is_finite()));
    }

    #[test]
    fn stage2_freezes_head() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = tiny_config();
        let (trained, _) = train_stage2(&ds, &enc, &cfg).unwrap();
        let n = enc.param_count();
        let before = enc.params();
        let after = trained.params();
        assert_eq!(before[n - 2], after[n - 2]);
        assert_eq!(before[n - 1], after[n - 1]);
        // Some non-head parameter moved.
        assert_ne!(enc, trained);
    }

    #[test]
    fn pseudo_negative_quantile_examples() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let unlabeled = ds.unlabeled_indices().len();
        // ceil(0.2 * unlabeled)
        let n = build_pseudo_negatives(&ds, &enc, 0.2).unwrap();
        assert_eq!(n.len(), (0.2f64 * unlabeled as f64).ceil() as usize);
        // Quantile close to 1 takes everything.
        let all = build_pseudo_negatives(&ds, &enc, 0.999999).unwrap();
        assert_eq!(all.len(), unlabeled);
    }

    #[test]
    fn pseudo_negative_tie_break_by_index() {
        // All-equal head probabilities: force them by zeroing the head.
        let ds = tiny_dataset();
        let mut enc = tiny_encoder();
        let n = enc.param_count();
        for (i, m) in enc.params_mut().into_iter().enumerate() {
            if i >= n - 2 {
                *m = Matrix::zeros(m.rows(), m.cols());
            }
        }
        let picked = build_pseudo_negatives(&ds, &enc, 0.25).unwrap();
        let unlabeled = ds.unlabeled_indices();
        let expect: Vec<usize> = unlabeled
            .iter()
            .copied()
            .take(picked.len())
            .collect();
        assert_eq!(picked, expect);
    }

    #[test]
    fn pseudo_negatives_lowest_quantile() {
        // 10 unlabeled with p in 0.05..0.95: q = 0.2 keeps the two lowest.
        // Checked through the ordering contract on a real encoder by
        // verifying picked probabilities are no larger than the rest.
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let picked = build_pseudo_negatives(&ds, &enc, 0.2).unwrap();
        let unlabeled = ds.unlabeled_indices();
        let prob_of = |i: usize| {
            let z = enc.encode(&ds.sample(i).features).unwrap();
            enc.head_probs(&z).unwrap()[1]
        };
        let max_picked = picked
            .iter()
            .map(|&i| prob_of(i))
            .fold(f64::NEG_INFINITY, f64::max);
        for i in unlabeled {
            if !picked.contains(&i) {
                assert!(prob_of(i) >= max_picked - 1e-12);
            }
        }
    }

    #[test]
    fn triplet_loss_examples() {
        let e = |v: &[f64]| {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            Embedding::new(v.iter().map(|x| x / norm).collect()).unwrap()
        };
        let a = e(&[1.0, 0.0]);
        let b = e(&[0.0, 1.0]);

        // a == p and the negative is far: satisfied margin.
        assert_eq!(triplet_loss(&a, &a, &b, 1.0), 0.0);
        // Total collapse: loss equals the margin.
        assert_eq!(triplet_loss(&a, &a, &a, 1.0), 1.0);
        // Unit vectors: |a-b|^2 = 2 - 2 a.b.
        // a.p = 1, a.n = 0 -> margin 1: max(0, 1 + 0 - 2) = 0; margin 3 -> 1.
        assert_eq!(triplet_loss(&a, &a, &b, 1.0), 0.0);
        assert_eq!(triplet_loss(&a, &a, &b, 3.0), 1.0);
    }

    #[test]
    fn stage2_requires_two_positives() {
        let ds = generate(&GenConfig {
            n_total: 30,
            n_labeled_positive: 1,
            val_fraction: 0.0,
            val_positive_prevalence: 0.0,
            ..GenConfig::default()
        })
        .unwrap();
        let enc = tiny_encoder();
        assert!(matches!(
            train_stage2(&ds, &enc, &tiny_config()),
            Err(TrainError::TooFewPositives(1))
        ));
    }

    #[test]
    fn encode_is_stable_after_training() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = tiny_config();
        let (s1, _) = train_stage1(&ds, &enc, &cfg).unwrap();
        let feats = &ds.sample(0).features;
        let a = s1.encode(feats).unwrap();
        let b = s1.encode(feats).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn log_csv_shape() {
        let ds = tiny_dataset();
        let enc = tiny_encoder();
        let cfg = tiny_config();
        let (_, log) = train_stage1(&ds, &enc, &cfg).unwrap();
        let csv = log.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "stage,epoch,mean_loss,raw_tau,v0_norm,head_acc,seconds");
        assert_eq!(lines.len(), 1 + cfg.stage1_epochs);
        assert!(lines[1].starts_with("1,1,"));
    }
}
