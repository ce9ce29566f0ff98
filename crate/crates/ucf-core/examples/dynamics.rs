use ucf_core::datagen::{generate, preprocess, GenConfig, GroundTruth};
use ucf_core::encoder::{EncoderConfig, EncoderState};
use ucf_core::evaluation::roc_auc;
use ucf_core::trainer::{train_stage1, train_stage2, TrainConfig};
use ucf_core::downstream::{fit, predict_proba, ClassifierKind, ClassifierSpec};
use ucf_core::numcore::Matrix;

fn auc_of(ds: &ucf_core::datagen::Dataset, feats: impl Fn(&[usize]) -> Matrix) -> f64 {
    let val = ds.val_indices();
    let tr = ds.train_indices();
    let yv: Vec<i8> = val.iter().map(|&i| if ds.sample(i).ground_truth == GroundTruth::Positive { 1 } else { -1 }).collect();
    let yt: Vec<i8> = tr.iter().map(|&i| if ds.sample(i).ground_truth == GroundTruth::Positive { 1 } else { -1 }).collect();
    let m = fit(&ClassifierSpec::new(ClassifierKind::LogisticRegression), &feats(&tr), &yt, 0).unwrap();
    roc_auc(&yv, &predict_proba(&m, &feats(&val)).unwrap()).unwrap()
}

fn main() {
    let lr: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1e-4);
    let r: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(32);
    let gen = GenConfig {
        n_total: 2000, n_labeled_positive: 150, separation: 2.0,
        noise_fraction: 0.0, val_positive_prevalence: 0.5,
        seed: ucf_core::numcore::derive_seed(0, "datagen"),
        ..GenConfig::default()
    };
    let ds = preprocess(&generate(&gen).unwrap()).unwrap();
    let train = ds.subset(&ds.train_indices());
    let enc = EncoderState::init(EncoderConfig::default(), ucf_core::numcore::derive_seed(0, "encoder")).unwrap();
    let cfg = TrainConfig {
        lr, batch_r: r, stage1_epochs: 10, stage2_epochs: 20,
        seed: ucf_core::numcore::derive_seed(0, "train"),
        ..TrainConfig::default()
    };
    let (enc1, log1) = train_stage1(&train, &enc, &cfg).unwrap();
    let curve: Vec<String> = log1.records.iter().map(|r| format!("{:.3}", r.mean_loss)).collect();
    println!("lr={lr} R={r}: [{}] ratio {:.4}", curve.join(" "), log1.records[9].mean_loss / log1.records[0].mean_loss);
    let (enc2, log2) = train_stage2(&train, &enc1, &cfg).unwrap();
    println!("  s2 {:.3} -> {:.3} | auc s1 {:.4} s2 {:.4}",
        log2.records[0].mean_loss, log2.records.last().unwrap().mean_loss,
        auc_of(&ds, |ids| enc1.encode_all(&ds.features_matrix(ids)).unwrap()),
        auc_of(&ds, |ids| enc2.encode_all(&ds.features_matrix(ids)).unwrap()));
}
