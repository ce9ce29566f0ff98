//! Parametric synthetic PU dataset generation and preprocessing.
//!
//! Two Gaussian classes separated by a seed-derived unit direction stand in
//! for real positive/negative populations. A configurable fraction of ground
//! truths is flipped as label noise, a fixed count of ground-truth positives
//! is marked as the labeled set, and a validation split with a configurable
//! positive prevalence is carved from the unlabeled pool (labeled positives
//! always stay in train). Ground truth is carried along for evaluation only;
//! the training signal is the PU label.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::numcore::{Matrix, Rng};
use thiserror::Error;

/// Session feature dimensionality.
pub const FEATURE_DIM: usize = 10;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("infeasible config: {0}")]
    InfeasibleConfig(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate session id {0}")]
    DuplicateSessionId(String),
    #[error("pu-labeled positive {0} has negative ground truth")]
    PuInvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PuLabel {
    Positive,
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruth {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub session_id: String,
    pub features: Vec<f64>,
    pub pu_label: PuLabel,
    pub ground_truth: GroundTruth,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub n_total: usize,
    pub n_labeled_positive: usize,
    /// Ground-truth positive fraction among the unlabeled pool.
    pub positive_prior: f64,
    /// Distance between the two class means.
    pub separation: f64,
    /// Fraction of samples whose ground truth is flipped before PU masking.
    pub noise_fraction: f64,
    pub val_fraction: f64,
    pub val_positive_prevalence: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_total: 15_000,
            n_labeled_positive: 1_000,
            positive_prior: 0.5,
            separation: 2.0,
            noise_fraction: 0.05,
            val_fraction: 0.1067,
            val_positive_prevalence: 0.9338,
            seed: 0,
        }
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Draw a synthetic PU dataset.
pub fn generate(cfg: &GenConfig) -> Result<Dataset, DataError> {
    if cfg.n_total == 0 || cfg.n_labeled_positive > cfg.n_total {
        return Err(DataError::InfeasibleConfig(format!(
            "n_labeled_positive {} exceeds n_total {}",
            cfg.n_labeled_positive, cfg.n_total
        )));
    }
    if !(0.0 < cfg.positive_prior && cfg.positive_prior < 1.0) {
        return Err(DataError::InfeasibleConfig(
            "positive_prior must lie in (0, 1)".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.noise_fraction) || cfg.separation < 0.0 {
        return Err(DataError::InfeasibleConfig(
            "noise_fraction in [0, 1) and separation >= 0 required".into(),
        ));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) || !(0.0..=1.0).contains(&cfg.val_positive_prevalence)
    {
        return Err(DataError::InfeasibleConfig(
            "val_fraction in [0, 1) and val_positive_prevalence in [0, 1] required".into(),
        ));
    }

    let mut rng = Rng::new(cfg.seed);
    let n = cfg.n_total;

    // Fixed unit direction separating the class means.
    let mut direction = [0.0f64; FEATURE_DIM];
    for d in &mut direction {
        *d = rng.next_gaussian();
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    for d in &mut direction {
        *d /= norm;
    }

    // Ground-truth assignment: the labeled quota plus the prior's share of
    // the unlabeled pool, then shuffled over all positions.
    let n_unlabeled = n - cfg.n_labeled_positive;
    let n_pos = cfg.n_labeled_positive + round_half_up(cfg.positive_prior * n_unlabeled as f64);
    if n_pos > n {
        return Err(DataError::InfeasibleConfig(
            "positive quota exceeds n_total".into(),
        ));
    }
    let mut truth: Vec<GroundTruth> = (0..n)
        .map(|i| {
            if i < n_pos {
                GroundTruth::Positive
            } else {
                GroundTruth::Negative
            }
        })
        .collect();
    rng.shuffle(&mut truth);

    // Features around +/- separation/2 along the direction.
    let half = cfg.separation / 2.0;
    let mut features: Vec<Vec<f64>> = Vec::with_capacity(n);
    for t in &truth {
        let sign = match t {
            GroundTruth::Positive => 1.0,
            GroundTruth::Negative => -1.0,
        };
        let row: Vec<f64> = direction
            .iter()
            .map(|&u| sign * half * u + rng.next_gaussian())
            .collect();
        features.push(row);
    }

    // Label noise: flip ground truth, features stay.
    let n_flip = round_half_up(cfg.noise_fraction * n as f64);
    let all: Vec<usize> = (0..n).collect();
    for idx in rng.sample_without_replacement(&all, n_flip) {
        truth[idx] = match truth[idx] {
            GroundTruth::Positive => GroundTruth::Negative,
            GroundTruth::Negative => GroundTruth::Positive,
        };
    }

    // PU masking: a uniform subset of the ground-truth positives is labeled.
    let positives: Vec<usize> = (0..n)
        .filter(|&i| truth[i] == GroundTruth::Positive)
        .collect();
    if positives.len() < cfg.n_labeled_positive {
        return Err(DataError::InfeasibleConfig(format!(
            "only {} ground-truth positives for {} labels",
            positives.len(),
            cfg.n_labeled_positive
        )));
    }
    let labeled: HashSet<usize> = rng
        .sample_without_replacement(&positives, cfg.n_labeled_positive)
        .into_iter()
        .collect();

    // Validation split from the unlabeled pool, matching the requested
    // prevalence. Labeled positives always stay in train.
    let n_val = round_half_up(cfg.val_fraction * n as f64);
    let n_val_pos = round_half_up(cfg.val_positive_prevalence * n_val as f64);
    let n_val_neg = n_val - n_val_pos;
    let unlabeled_pos: Vec<usize> = (0..n)
        .filter(|i| !labeled.contains(i) && truth[*i] == GroundTruth::Positive)
        .collect();
    let unlabeled_neg: Vec<usize> = (0..n)
        .filter(|i| !labeled.contains(i) && truth[*i] == GroundTruth::Negative)
        .collect();
    if unlabeled_pos.len() < n_val_pos || unlabeled_neg.len() < n_val_neg {
        return Err(DataError::InfeasibleConfig(format!(
            "validation needs {n_val_pos} positives and {n_val_neg} negatives, \
             unlabeled pool has {} and {}",
            unlabeled_pos.len(),
            unlabeled_neg.len()
        )));
    }
    let mut in_val = vec![false; n];
    for idx in rng.sample_without_replacement(&unlabeled_pos, n_val_pos) {
        in_val[idx] = true;
    }
    for idx in rng.sample_without_replacement(&unlabeled_neg, n_val_neg) {
        in_val[idx] = true;
    }

    let samples = (0..n)
        .map(|i| Sample {
            session_id: format!("s{i:06}"),
            features: features[i].clone(),
            pu_label: if labeled.contains(&i) {
                PuLabel::Positive
            } else {
                PuLabel::Unlabeled
            },
            ground_truth: truth[i],
            split: if in_val[i] { Split::Val } else { Split::Train },
        })
        .collect();
    let dataset = Dataset { samples };
    dataset.validate()?;
    Ok(dataset)
}

/// Remove exact-duplicate feature rows (first kept) and min-max scale each
/// feature column to [0, 1] with statistics frozen on the training split.
/// Validation rows use the same statistics, clipped to [-0.5, 1.5]; a
/// constant column maps every value to 0.5.
pub fn preprocess(dataset: &Dataset) -> Result<Dataset, DataError> {
    // Deduplicate on exact feature bits.
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut kept: Vec<Sample> = Vec::with_capacity(dataset.samples.len());
    for s in &dataset.samples {
        let key: Vec<u64> = s.features.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            kept.push(s.clone());
        }
    }

    let train_rows: Vec<&Sample> = kept.iter().filter(|s| s.split == Split::Train).collect();
    if train_rows.is_empty() {
        return Err(DataError::InfeasibleConfig(
            "cannot scale: training split is empty".into(),
        ));
    }
    let dim = train_rows[0].features.len();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for s in &train_rows {
        for (c, &v) in s.features.iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }

    for s in &mut kept {
        let clip = s.split == Split::Val;
        for (c, v) in s.features.iter_mut().enumerate() {
            *v = if hi[c] == lo[c] {
                0.5
            } else {
                (*v - lo[c]) / (hi[c] - lo[c])
            };
            if clip {
                *v = v.clamp(-0.5, 1.5);
            }
        }
    }
    Ok(Dataset { samples: kept })
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self, DataError> {
        let d = Dataset { samples };
        d.validate()?;
        Ok(d)
    }

    /// PU consistency and session-id uniqueness.
    pub fn validate(&self) -> Result<(), DataError> {
        let mut ids = HashSet::new();
        for s in &self.samples {
            if !ids.insert(s.session_id.as_str()) {
                return Err(DataError::DuplicateSessionId(s.session_id.clone()));
            }
            if s.pu_label == PuLabel::Positive && s.ground_truth != GroundTruth::Positive {
                return Err(DataError::PuInvariantViolation(s.session_id.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> &Sample {
        &self.samples[i]
    }

    pub fn indices_where(&self, pred: impl Fn(&Sample) -> bool) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&i| pred(&self.samples[i]))
            .collect()
    }

    pub fn labeled_positive_indices(&self) -> Vec<usize> {
        self.indices_where(|s| s.pu_label == PuLabel::Positive)
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        self.indices_where(|s| s.pu_label == PuLabel::Unlabeled)
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices_where(|s| s.split == Split::Train)
    }

    pub fn val_indices(&self) -> Vec<usize> {
        self.indices_where(|s| s.split == Split::Val)
    }

    /// New dataset holding clones of the selected samples.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Feature rows of the selected samples, stacked.
    pub fn features_matrix(&self, indices: &[usize]) -> Matrix {
        let dim = if self.samples.is_empty() {
            FEATURE_DIM
        } else {
            self.samples[0].features.len()
        };
        let mut data = Vec::with_capacity(indices.len() * dim);
        for &i in indices {
            data.extend_from_slice(&self.samples[i].features);
        }
        Matrix::from_vec(indices.len(), dim, data).expect("uniform feature rows")
    }

    pub fn save_to_string(&self) -> String {
        let dim = self
            .samples
            .first()
            .map_or(FEATURE_DIM, |s| s.features.len());
        let mut out = String::new();
        out.push_str("session_id");
        for c in 0..dim {
            let _ = write!(out, ",f{c}");
        }
        out.push_str(",pu_label,ground_truth,split\n");
        for s in &self.samples {
            out.push_str(&s.session_id);
            for v in &s.features {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            let pu = match s.pu_label {
                PuLabel::Positive => "1",
                PuLabel::Unlabeled => "0",
            };
            let gt = match s.ground_truth {
                GroundTruth::Positive => "1",
                GroundTruth::Negative => "-1",
            };
            let split = match s.split {
                Split::Train => "train",
                Split::Val => "val",
            };
            let _ = writeln!(out, ",{pu},{gt},{split}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        fs::write(path, self.save_to_string())?;
        Ok(())
    }

    pub fn load_from_str(text: &str) -> Result<Dataset, DataError> {
        // CRLF and LF inputs parse identically.
        let text = text.replace("\r\n", "\n");
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(DataError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 5 || cols[0] != "session_id" {
            return Err(DataError::Parse {
                line: 1,
                msg: "expected header session_id,f0,...,pu_label,ground_truth,split".into(),
            });
        }
        let dim = cols.len() - 4;
        for (c, name) in cols[1..1 + dim].iter().enumerate() {
            if *name != format!("f{c}") {
                return Err(DataError::Parse {
                    line: 1,
                    msg: format!("unexpected feature column {name}"),
                });
            }
        }
        if cols[1 + dim] != "pu_label" || cols[2 + dim] != "ground_truth" || cols[3 + dim] != "split"
        {
            return Err(DataError::Parse {
                line: 1,
                msg: "trailing columns must be pu_label,ground_truth,split".into(),
            });
        }

        let mut samples = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let line_1 = lineno + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 4 {
                return Err(DataError::Parse {
                    line: line_1,
                    msg: format!("expected {} fields, got {}", dim + 4, fields.len()),
                });
            }
            let mut features = Vec::with_capacity(dim);
            for f in &fields[1..1 + dim] {
                features.push(f.parse::<f64>().map_err(|e| DataError::Parse {
                    line: line_1,
                    msg: format!("bad float {f:?}: {e}"),
                })?);
            }
            let pu_label = match fields[1 + dim] {
                "1" => PuLabel::Positive,
                "0" => PuLabel::Unlabeled,
                other => {
                    return Err(DataError::Parse {
                        line: line_1,
                        msg: format!("bad pu_label {other:?}"),
                    })
                }
            };
            let ground_truth = match fields[2 + dim] {
                "1" => GroundTruth::Positive,
                "-1" => GroundTruth::Negative,
                other => {
                    return Err(DataError::Parse {
                        line: line_1,
                        msg: format!("bad ground_truth {other:?}"),
                    })
                }
            };
            let split = match fields[3 + dim] {
                "train" => Split::Train,
                "val" => Split::Val,
                other => {
                    return Err(DataError::Parse {
                        line: line_1,
                        msg: format!("bad split {other:?}"),
                    })
                }
            };
            samples.push(Sample {
                session_id: fields[0].to_string(),
                features,
                pu_label,
                ground_truth,
                split,
            });
        }
        Dataset::new(samples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
        Dataset::load_from_str(&fs::read_to_string(path)?)
    }
}

/// 17-significant-digit float formatting used in every CSV artifact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_cfg() -> GenConfig {
        GenConfig {
            n_total: 2000,
            n_labeled_positive: 150,
            ..GenConfig::default()
        }
    }

    #[test]
    fn defaults_match_expected_counts() {
        let ds = generate(&GenConfig::default()).unwrap();
        assert_eq!(ds.len(), 15_000);
        assert_eq!(ds.labeled_positive_indices().len(), 1_000);
        let val = ds.val_indices();
        assert_eq!(val.len(), 1_601);
        let val_pos = val
            .iter()
            .filter(|&&i| ds.sample(i).ground_truth == GroundTruth::Positive)
            .count();
        assert_eq!(val_pos, 1_495);
    }

    #[test]
    fn pu_invariant_holds_exhaustively() {
        let ds = generate(&desk_cfg()).unwrap();
        for s in ds.samples() {
            if s.pu_label == PuLabel::Positive {
                assert_eq!(s.ground_truth, GroundTruth::Positive);
            }
        }
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let a = generate(&desk_cfg()).unwrap().save_to_string();
        let b = generate(&desk_cfg()).unwrap().save_to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn labeled_positives_stay_in_train() {
        let ds = generate(&desk_cfg()).unwrap();
        for &i in &ds.labeled_positive_indices() {
            assert_eq!(ds.sample(i).split, Split::Train);
        }
    }

    #[test]
    fn infeasible_label_count_rejected() {
        let cfg = GenConfig {
            n_total: 100,
            n_labeled_positive: 200,
            ..GenConfig::default()
        };
        assert!(matches!(
            generate(&cfg),
            Err(DataError::InfeasibleConfig(_))
        ));
    }

    #[test]
    fn preprocess_dedups_and_scales() {
        let mk = |id: &str, f: Vec<f64>, split: Split| Sample {
            session_id: id.into(),
            features: f,
            pu_label: PuLabel::Unlabeled,
            ground_truth: GroundTruth::Negative,
            split,
        };
        let ds = Dataset::new(vec![
            mk("a", vec![2.0, 7.0], Split::Train),
            mk("b", vec![4.0, 7.0], Split::Train),
            mk("c", vec![4.0, 7.0], Split::Train), // exact duplicate of b
            mk("d", vec![3.0, 7.0], Split::Val),
        ])
        .unwrap();
        let out = preprocess(&ds).unwrap();
        assert_eq!(out.len(), 3);
        // Column 0: min 2, max 4 -> value 3 maps to 0.5.
        assert_eq!(out.sample(2).features[0], 0.5);
        // Constant column maps to 0.5 everywhere.
        assert!(out.samples().iter().all(|s| s.features[1] == 0.5));
        assert_eq!(out.sample(0).features[0], 0.0);
        assert_eq!(out.sample(1).features[0], 1.0);
    }

    #[test]
    fn preprocess_idempotent_on_normalized_input() {
        let mk = |id: &str, f: Vec<f64>| Sample {
            session_id: id.into(),
            features: f,
            pu_label: PuLabel::Unlabeled,
            ground_truth: GroundTruth::Negative,
            split: Split::Train,
        };
        let ds = Dataset::new(vec![
            mk("a", vec![0.0, 0.0]),
            mk("b", vec![1.0, 1.0]),
            mk("c", vec![0.25, 0.75]),
        ])
        .unwrap();
        let out = preprocess(&ds).unwrap();
        for (s, t) in ds.samples().iter().zip(out.samples()) {
            for (a, b) in s.features.iter().zip(&t.features) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn val_clipped_to_guard_range() {
        let mk = |id: &str, f: Vec<f64>, split: Split| Sample {
            session_id: id.into(),
            features: f,
            pu_label: PuLabel::Unlabeled,
            ground_truth: GroundTruth::Negative,
            split,
        };
        let ds = Dataset::new(vec![
            mk("a", vec![0.0], Split::Train),
            mk("b", vec![1.0], Split::Train),
            mk("c", vec![9.0], Split::Val), // scales to 9, clips to 1.5
        ])
        .unwrap();
        let out = preprocess(&ds).unwrap();
        assert_eq!(out.sample(2).features[0], 1.5);
    }

    #[test]
    fn csv_round_trip() {
        let ds = generate(&GenConfig {
            n_total: 50,
            n_labeled_positive: 10,
            val_fraction: 0.2,
            val_positive_prevalence: 0.5,
            ..GenConfig::default()
        })
        .unwrap();
        let text = ds.save_to_string();
        let back = Dataset::load_from_str(&text).unwrap();
        assert_eq!(ds, back);
    }

    #[test]
    fn crlf_and_lf_parse_identically() {
        let ds = generate(&GenConfig {
            n_total: 20,
            n_labeled_positive: 5,
            val_fraction: 0.2,
            val_positive_prevalence: 0.5,
            ..GenConfig::default()
        })
        .unwrap();
        let lf = ds.save_to_string();
        let crlf = lf.replace('\n', "\r\n");
        assert_eq!(
            Dataset::load_from_str(&lf).unwrap(),
            Dataset::load_from_str(&crlf).unwrap()
        );
    }

    #[test]
    fn short_row_is_parse_error_with_line() {
        let ds = generate(&GenConfig {
            n_total: 20,
            n_labeled_positive: 5,
            val_fraction: 0.2,
            val_positive_prevalence: 0.5,
            ..GenConfig::default()
        })
        .unwrap();
        let mut text = ds.save_to_string();
        // Drop one field from the row on line 3.
        let lines: Vec<&str> = text.lines().collect();
        let broken = lines[2].rsplit_once(',').unwrap().0.to_string();
        let mut rebuilt: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
        rebuilt[2] = broken;
        text = rebuilt.join("\n");
        match Dataset::load_from_str(&text) {
            Err(DataError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_session_id_is_integrity_error() {
        let mk = |id: &str| Sample {
            session_id: id.into(),
            features: vec![0.0; 2],
            pu_label: PuLabel::Unlabeled,
            ground_truth: GroundTruth::Negative,
            split: Split::Train,
        };
        assert!(matches!(
            Dataset::new(vec![mk("x"), mk("x")]),
            Err(DataError::DuplicateSessionId(_))
        ));
    }
}
