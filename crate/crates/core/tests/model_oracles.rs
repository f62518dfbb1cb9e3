mod common;

use common::*;
use humor_core::encoder::{EmbeddingRecord, EmbeddingVector};
use humor_core::model::{self, ModelConfig};

#[test]
fn analytic_gradient_matches_finite_differences() {
    let cfg = toy_config(6, 3, 1);
    let params = params_off_kinks(&cfg, 1);
    let full = random_record(6, 3, 10);
    let padded = random_record(6, 1, 11);
    let records = [&full, &padded];
    let labels = [true, false];
    let (grad, _) = model::batch_gradient(&params, &records, &labels, &cfg).unwrap();
    let numeric = numeric_gradient(&params, &records, &labels, &cfg);
    let worst = grad
        .values()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max);
    assert!(worst <= 1e-4, "max relative error {worst:e}");
}

#[test]
fn forward_matches_hand_evaluation() {
    let net = TinyNet::new();
    let params = net.to_params();
    let cfg = tiny_config();
    for (s, w) in [
        ([0.3, -0.7], [0.9, 0.1]),
        ([1.0, 1.0], [-1.0, 0.5]),
        ([0.0, 0.0], [0.0, 0.0]),
    ] {
        let record = EmbeddingRecord {
            example_id: 0,
            whole_text: EmbeddingVector::new(w.iter().map(|&x| x as f32).collect()).unwrap(),
            sentence_vectors: vec![EmbeddingVector::new(s.iter().map(|&x| x as f32).collect()).unwrap()],
        };
        let expected = net.probability(
            [s[0] as f32 as f64, s[1] as f32 as f64],
            [w[0] as f32 as f64, w[1] as f32 as f64],
        );
        let (pred, _) = model::forward(&params, &record, &cfg).unwrap();
        assert!(
            (pred.probability - expected).abs() <= 1e-10,
            "{} vs {expected}",
            pred.probability
        );
    }
}

#[test]
fn default_parameter_count() {
    // sum over layers of in*out + out, worked out by hand for
    // 3 x (768-128-64-20) + (768-256-128-60) + (120-128-32-1)
    const EXPECTED: usize = 581_113;
    let cfg = ModelConfig::default();
    assert_eq!(cfg.param_count(), EXPECTED);
    assert_eq!(model::init(&cfg).unwrap().len(), EXPECTED);
}

#[test]
fn batch_gradient_is_order_free() {
    let cfg = toy_config(4, 3, 2);
    let params = params_off_kinks(&cfg, 2);
    let recs: Vec<EmbeddingRecord> = (0..13)
        .map(|i| random_record(4, 1 + (i as usize % 3), 100 + i))
        .collect();
    let labels: Vec<bool> = (0..13).map(|i| i % 3 == 0).collect();
    let refs: Vec<&EmbeddingRecord> = recs.iter().collect();
    let (g1, l1) = model::batch_gradient(&params, &refs, &labels, &cfg).unwrap();
    let (g1b, _) = model::batch_gradient(&params, &refs, &labels, &cfg).unwrap();
    assert_eq!(g1, g1b);

    let perm: Vec<usize> = (0..13).rev().collect();
    let refs2: Vec<&EmbeddingRecord> = perm.iter().map(|&i| &recs[i]).collect();
    let labels2: Vec<bool> = perm.iter().map(|&i| labels[i]).collect();
    let (g2, l2) = model::batch_gradient(&params, &refs2, &labels2, &cfg).unwrap();
    assert!((l1 - l2).abs() <= 1e-12);
    for (a, b) in g1.values().zip(g2.values()) {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn forward_stays_in_open_unit_interval() {
    for seed in 0..20 {
        let cfg = toy_config(6, 3, seed);
        let params = model::init(&cfg).unwrap();
        for s in 1..=4 {
            let (pred, _) = model::forward(&params, &random_record(6, s, seed * 10 + s as u64), &cfg).unwrap();
            assert!(pred.probability > 0.0 && pred.probability < 1.0);
            assert!(model::loss(pred.probability, true).is_finite());
        }
    }
}

#[test]
fn save_load_preserves_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.cbpm");
    let cfg = toy_config(6, 2, 3);
    let params = params_off_kinks(&cfg, 3);
    let rec = random_record(6, 2, 4);
    let before = model::predict(&params, &rec, &cfg).unwrap();
    model::save_params(&path, &params, &cfg).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let (loaded, loaded_cfg) = model::load_params(&path).unwrap();
    assert_eq!(loaded, params);
    assert_eq!(loaded_cfg, cfg);
    assert_eq!(model::predict(&loaded, &rec, &loaded_cfg).unwrap(), before);
    model::save_params(&path, &loaded, &loaded_cfg).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);

    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(
        model::load_params(&path),
        Err(model::ModelError::TruncatedFile { .. })
    ));
}
