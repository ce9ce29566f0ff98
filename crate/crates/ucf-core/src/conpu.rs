//! Contrastive PU core: batch sampling, adaptive temperature, direction
//! diagnostic, candidate/positive/negative set construction, per-pair
//! InfoNCE terms, uncertainty weights, and the two PU contrastive loss
//! variants.
//!
//! Terminology: a batch holds R training slots (the anchors, drawn from the
//! whole pool) plus M auxiliary slots drawn from the labeled positives. Each
//! anchor's candidate set is every other slot; candidates split into the
//! indicator-1 and indicator-0 subsets, and the anchor attracts whichever
//! subset matches its own indicator. Duplicate underlying samples are kept
//! as distinct slots.

use crate::datagen::{Dataset, PuLabel};
use crate::numcore::{Matrix, NodeId, Rng, Tape};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConpuError {
    #[error("auxiliary batch needs {requested} labeled positives, dataset has {available}")]
    InsufficientPositives { requested: usize, available: usize },
    #[error("training batch needs {requested} samples, dataset has {available}")]
    InsufficientSamples { requested: usize, available: usize },
    #[error("batch sizes must be at least 2, got R={r}, M={m}")]
    BatchTooSmall { r: usize, m: usize },
    #[error("epoch must be >= 1 (the temperature divides by ln(1 + epoch))")]
    EpochZero,
    #[error("tau0 must be nonzero")]
    ZeroTau0,
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("slot {partner} is not in the candidate set of anchor {anchor}")]
    PartnerNotInCandidates { anchor: usize, partner: usize },
    #[error("temperature must be positive, got {0}")]
    NonPositiveTau(f64),
    #[error("batch has no anchors")]
    NoAnchors,
    #[error("candidate sets violate the partition invariant at slot {0}")]
    BrokenPartition(usize),
    #[error(transparent)]
    Num(#[from] crate::numcore::NumError),
}

/// Temperature constants: the clamp range for the adaptive value and the
/// two scale factors of the direction diagnostic.
#[derive(Debug, Clone)]
pub struct TauParams {
    pub tau0: f64,
    pub tau1: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl Default for TauParams {
    fn default() -> Self {
        TauParams {
            tau0: 1.0,
            tau1: 0.5,
            tau_min: 0.05,
            tau_max: 5.0,
        }
    }
}

/// Which loss shape to use: plain sums, or set-size-normalized sums scaled
/// by the per-anchor uncertainty weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossVariant {
    SumUnweighted,
    MeanWeighted,
}

/// Draw the training slots (uniform, without replacement, from the whole
/// dataset) and the auxiliary slots (from the labeled positives only).
/// The two draws are independent, so a labeled sample may occupy both a
/// training and an auxiliary slot.
pub fn sample_batches(
    dataset: &Dataset,
    r: usize,
    m: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), ConpuError> {
    if r < 2 || m < 2 {
        return Err(ConpuError::BatchTooSmall { r, m });
    }
    if r > dataset.len() {
        return Err(ConpuError::InsufficientSamples {
            requested: r,
            available: dataset.len(),
        });
    }
    let labeled = dataset.labeled_positive_indices();
    if m > labeled.len() {
        return Err(ConpuError::InsufficientPositives {
            requested: m,
            available: labeled.len(),
        });
    }
    let mut rng = Rng::new(seed);
    let all: Vec<usize> = (0..dataset.len()).collect();
    let s = rng.sample_without_replacement(&all, r);
    let s_aux = rng.sample_without_replacement(&labeled, m);
    Ok((s, s_aux))
}

/// Population standard deviation across the entries of a vector.
pub fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Unclamped adaptive temperature: std of the batch-mean embedding over its
/// dimensions, divided by ln(1 + epoch). Logged as the "raw" value.
pub fn raw_tau(v_d: &[f64], epoch: usize) -> Result<f64, ConpuError> {
    if epoch == 0 {
        return Err(ConpuError::EpochZero);
    }
    Ok(population_std(v_d) / (1.0 + epoch as f64).ln())
}

/// Adaptive temperature, clamped to `[tau_min, tau_max]`. A degenerate
/// spread (std below 1e-12) pins the temperature at the minimum.
pub fn adaptive_tau(v_d: &[f64], epoch: usize, params: &TauParams) -> Result<f64, ConpuError> {
    if epoch == 0 {
        return Err(ConpuError::EpochZero);
    }
    let sigma = population_std(v_d);
    if sigma < 1e-12 {
        return Ok(params.tau_min);
    }
    let tau = sigma / (1.0 + epoch as f64).ln();
    Ok(tau.clamp(params.tau_min, params.tau_max))
}

/// Variance-adjusted movement direction `(v_D - tau1 * v_1) / tau0`.
/// Computed per batch and logged as a diagnostic.
pub fn direction_v0(v_d: &[f64], v_1: &[f64], params: &TauParams) -> Result<Vec<f64>, ConpuError> {
    if params.tau0 == 0.0 {
        return Err(ConpuError::ZeroTau0);
    }
    if v_d.len() != v_1.len() {
        return Err(ConpuError::LengthMismatch(v_d.len(), v_1.len()));
    }
    Ok(v_d
        .iter()
        .zip(v_1)
        .map(|(d, p)| (d - params.tau1 * p) / params.tau0)
        .collect())
}

/// Positivity indicator: labeled positives are always positive; unlabeled
/// samples take the head's vote with ties (p = 0.5) resolving positive.
pub fn indicator(labeled_positive: bool, p_positive: f64) -> bool {
    labeled_positive || p_positive >= 0.5
}

/// Uncertainty weight `1 - max(p)`, in [0, 0.5] for a 2-class simplex.
pub fn uncertainty_weight(p: [f64; 2]) -> f64 {
    1.0 - p[0].max(p[1])
}

/// One training batch with everything the loss needs: slot embeddings and
/// head probabilities (as plain values), per-slot indicators, and the
/// candidate/positive/negative index sets over slots.
#[derive(Debug, Clone)]
pub struct ContrastiveBatch {
    /// Dataset indices of the R training slots.
    pub s: Vec<usize>,
    /// Dataset indices of the M auxiliary slots (labeled positives).
    pub s_aux: Vec<usize>,
    /// (R+M) x embed slot embeddings, unit rows.
    pub z: Matrix,
    /// Per-slot: does the slot hold a labeled positive?
    pub labeled: Vec<bool>,
    /// (R+M) x 2 head probabilities per slot.
    pub probs: Matrix,
    /// Per-slot positivity indicator.
    pub indicators: Vec<bool>,
    /// Slot indices that act as anchors (the R training slots).
    pub anchors: Vec<usize>,
    /// Candidate set per slot: every other slot.
    pub candidates: Vec<Vec<usize>>,
    /// Indicator-1 subset of each candidate set.
    pub positive_set: Vec<Vec<usize>>,
    /// Indicator-0 subset of each candidate set.
    pub negative_set: Vec<Vec<usize>>,
}

impl ContrastiveBatch {
    /// Assemble a batch from sampled indices plus the encoder outputs for
    /// the slots (first the R training slots, then the M auxiliary slots).
    pub fn assemble(
        dataset: &Dataset,
        s: Vec<usize>,
        s_aux: Vec<usize>,
        z: Matrix,
        probs: Matrix,
    ) -> Result<Self, ConpuError> {
        let labeled = s
            .iter()
            .chain(&s_aux)
            .map(|&i| dataset.sample(i).pu_label == PuLabel::Positive)
            .collect();
        let anchors = (0..s.len()).collect();
        let mut batch = ContrastiveBatch {
            s,
            s_aux,
            z,
            labeled,
            probs,
            indicators: Vec::new(),
            anchors,
            candidates: Vec::new(),
            positive_set: Vec::new(),
            negative_set: Vec::new(),
        };
        batch.indicators = (0..batch.len())
            .map(|i| indicator(batch.labeled[i], batch.probs.get(i, 1)))
            .collect();
        candidate_sets(&mut batch)?;
        Ok(batch)
    }

    /// Number of slots (R + M).
    pub fn len(&self) -> usize {
        self.labeled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labeled.is_empty()
    }

    /// Mean embedding of the R training slots.
    pub fn mean_training_embedding(&self) -> Vec<f64> {
        mean_of_rows(&self.z, 0, self.s.len())
    }

    /// Mean embedding of the M auxiliary slots.
    pub fn mean_auxiliary_embedding(&self) -> Vec<f64> {
        mean_of_rows(&self.z, self.s.len(), self.len())
    }
}

fn mean_of_rows(z: &Matrix, from: usize, to: usize) -> Vec<f64> {
    let mut out = vec![0.0; z.cols()];
    for r in from..to {
        for (c, o) in out.iter_mut().enumerate() {
            *o += z.get(r, c);
        }
    }
    let inv = 1.0 / (to - from) as f64;
    out.iter_mut().for_each(|v| *v *= inv);
    out
}

/// Fill the candidate sets: for every slot i, A(i) is every other slot,
/// split by indicator into the positive and negative subsets. The partition
/// invariant (disjoint union equal to A) is re-verified on every call.
pub fn candidate_sets(batch: &mut ContrastiveBatch) -> Result<(), ConpuError> {
    let n = batch.len();
    batch.candidates.clear();
    batch.positive_set.clear();
    batch.negative_set.clear();
    for i in 0..n {
        let a: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let b0: Vec<usize> = a.iter().copied().filter(|&j| !batch.indicators[j]).collect();
        let b1: Vec<usize> = a.iter().copied().filter(|&j| batch.indicators[j]).collect();
        batch.candidates.push(a);
        batch.positive_set.push(b1);
        batch.negative_set.push(b0);
    }
    verify_partition(batch)
}

/// The disjoint-union check B1 + B0 = A, run continuously during training.
pub fn verify_partition(batch: &ContrastiveBatch) -> Result<(), ConpuError> {
    for i in 0..batch.len() {
        let mut merged: Vec<usize> = batch.positive_set[i]
            .iter()
            .chain(&batch.negative_set[i])
            .copied()
            .collect();
        merged.sort_unstable();
        let mut expected = batch.candidates[i].clone();
        expected.sort_unstable();
        let disjoint = batch.positive_set[i]
            .iter()
            .all(|j| !batch.negative_set[i].contains(j));
        if merged != expected || !disjoint {
            return Err(ConpuError::BrokenPartition(i));
        }
    }
    Ok(())
}

/// Per-pair InfoNCE term: the negative log-probability of picking partner
/// `p` out of anchor `i`'s full candidate set under temperature `tau`,
/// computed with max-logit subtraction. Always nonnegative; equals
/// ln|A(i)| when all similarities coincide.
pub fn pair_loss(
    i: usize,
    p: usize,
    batch: &ContrastiveBatch,
    tau: f64,
) -> Result<f64, ConpuError> {
    if tau <= 0.0 {
        return Err(ConpuError::NonPositiveTau(tau));
    }
    let a = &batch.candidates[i];
    if !a.contains(&p) {
        return Err(ConpuError::PartnerNotInCandidates {
            anchor: i,
            partner: p,
        });
    }
    let zi = batch.z.row(i);
    let logit = |j: usize| -> f64 {
        let zj = batch.z.row(j);
        zi.iter().zip(zj).map(|(x, y)| x * y).sum::<f64>() / tau
    };
    let max = a
        .iter()
        .map(|&j| logit(j))
        .fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = a.iter().map(|&j| (logit(j) - max).exp()).sum();
    Ok(-(logit(p) - max - denom.ln()))
}

/// Build the PU contrastive loss over a batch as a differentiable node.
///
/// `z` must be the tape node whose value equals `batch.z` (the (R+M) x embed
/// slot embeddings). Head probabilities enter only through the indicator
/// split and the uncertainty weights, both captured as constants, so no
/// gradient flows through them. Anchors with an empty selected set
/// contribute zero.
pub fn conpu_loss(
    tape: &mut Tape,
    z: NodeId,
    batch: &ContrastiveBatch,
    tau: f64,
    variant: LossVariant,
) -> Result<NodeId, ConpuError> {
    if batch.anchors.is_empty() {
        return Err(ConpuError::NoAnchors);
    }
    if tau <= 0.0 {
        return Err(ConpuError::NonPositiveTau(tau));
    }
    let n = batch.len();
    // Pairwise cosine similarities (rows are unit vectors).
    let sims = tape.matmul_transpose_b(z, z)?;

    // Exclude the self-similarity by pushing its logit far enough down that
    // its exp underflows to exactly zero under any clamped temperature.
    const MASK: f64 = 1e9;

    let mut total = tape.constant(Matrix::scalar(0.0));
    for &i in &batch.anchors {
        let selected = if batch.indicators[i] {
            &batch.positive_set[i]
        } else {
            &batch.negative_set[i]
        };
        if selected.is_empty() {
            continue;
        }
        let pick = tape.constant(Matrix::one_hot_row(n, i));
        let row = tape.matmul(pick, sims)?;
        let mask = tape.constant(Matrix::one_hot_row(n, i).scale(MASK));
        let masked = tape.sub(row, mask)?;
        let logits = tape.scale(masked, 1.0 / tau);
        let softmax = tape.softmax_rows(logits);

        // Gather the selected slots' probabilities in one matmul.
        let mut sel = Matrix::zeros(n, selected.len());
        for (c, &j) in selected.iter().enumerate() {
            sel.set(j, c, 1.0);
        }
        let sel = tape.constant(sel);
        let gathered = tape.matmul(softmax, sel)?;
        let logs = tape.log(gathered)?;
        let log_sum = tape.sum(logs);

        let factor = match variant {
            LossVariant::SumUnweighted => -1.0,
            LossVariant::MeanWeighted => {
                let w = uncertainty_weight([batch.probs.get(i, 0), batch.probs.get(i, 1)]);
                -w / selected.len() as f64
            }
        };
        let term = tape.scale(log_sum, factor);
        total = tape.add(total, term)?;
    }
    Ok(tape.scale(total, 1.0 / batch.anchors.len() as f64))
}
