//! Independent reference computations shared by the integration suites.
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use humor_core::encoder::{EmbeddingRecord, EmbeddingVector};
use humor_core::model::{self, Activation, ModelConfig, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-4;

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / scale
}

pub fn toy_config(dim: usize, s_max: usize, seed: u64) -> ModelConfig {
    ModelConfig {
        dim,
        s_max,
        sentence_path_sizes: vec![4, 3, 20],
        text_path_sizes: vec![5, 4, 60],
        head_sizes: vec![6, 3, 1],
        activation: Activation::Relu,
        seed,
    }
}

pub fn random_record(dim: usize, sentences: usize, seed: u64) -> EmbeddingRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || EmbeddingVector::new((0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).unwrap();
    EmbeddingRecord {
        example_id: seed,
        whole_text: v(),
        sentence_vectors: (0..sentences).map(|_| v()).collect(),
    }
}

/// Initialized params with small random biases so that no hidden unit sits
/// exactly on the ReLU kink (zero-input padded paths would otherwise).
pub fn params_off_kinks(cfg: &ModelConfig, seed: u64) -> ModelParams {
    let mut params = model::init(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for layer in &mut params.layers {
        for b in &mut layer.bias {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            *b = (rng.gen_range(0.02..0.2) * sign) as f32 as f64;
        }
    }
    params
}

/// Mean clamped BCE over a batch, from the forward pass only.
pub fn batch_loss(params: &ModelParams, records: &[&EmbeddingRecord], labels: &[bool], cfg: &ModelConfig) -> f64 {
    let total: f64 = records
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let (pred, _) = model::forward(params, r, cfg).unwrap();
            model::loss(pred.probability, y)
        })
        .sum();
    total / records.len() as f64
}

fn central_difference(work: &mut ModelParams, j: usize, h: f64, eval: &dyn Fn(&ModelParams) -> f64) -> f64 {
    let original = *work.values().nth(j).unwrap();
    *work.values_mut().nth(j).unwrap() = original + h;
    let plus = eval(work);
    *work.values_mut().nth(j).unwrap() = original - h;
    let minus = eval(work);
    *work.values_mut().nth(j).unwrap() = original;
    (plus - minus) / (2.0 * h)
}

/// Richardson-extrapolated central differences, `(4 D(h/2) - D(h)) / 3`,
/// for every parameter. Truncation error is O(h^4).
pub fn numeric_gradient(
    params: &ModelParams,
    records: &[&EmbeddingRecord],
    labels: &[bool],
    cfg: &ModelConfig,
) -> Vec<f64> {
    let eval = |p: &ModelParams| batch_loss(p, records, labels, cfg);
    let mut work = params.clone();
    (0..params.len())
        .map(|j| {
            let coarse = central_difference(&mut work, j, FD_STEP, &eval);
            let fine = central_difference(&mut work, j, FD_STEP / 2.0, &eval);
            (4.0 * fine - coarse) / 3.0
        })
        .collect()
}

/// Hand-wired network for `dim = 2`, one sentence path, sizes
/// `[2, 2, 20] / [2, 2, 60] / [2, 2, 1]`. Weights come from closed-form
/// formulas so the oracle never looks at the engine's storage.
pub struct TinyNet {
    /// (weights[out][in], bias[out]) per layer in network order.
    pub layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>,
}

pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        dim: 2,
        s_max: 1,
        sentence_path_sizes: vec![2, 2, 20],
        text_path_sizes: vec![2, 2, 60],
        head_sizes: vec![2, 2, 1],
        activation: Activation::Relu,
        seed: 0,
    }
}

fn tiny_weight(layer: usize, out: usize, inp: usize) -> f64 {
    let x = (layer * 131 + out * 17 + inp * 7) as f64;
    ((x * 0.37).sin() * 0.8) as f32 as f64
}

fn tiny_bias(layer: usize, out: usize) -> f64 {
    (((layer * 11 + out * 3) as f64 * 0.23).cos() * 0.1) as f32 as f64
}

impl TinyNet {
    pub fn new() -> Self {
        let shapes = [
            (2, 2),
            (2, 2),
            (2, 20),
            (2, 2),
            (2, 2),
            (2, 60),
            (80, 2),
            (2, 2),
            (2, 1),
        ];
        let layers = shapes
            .iter()
            .enumerate()
            .map(|(k, &(i, o))| {
                let w = (0..o).map(|r| (0..i).map(|c| tiny_weight(k, r, c)).collect()).collect();
                let b = (0..o).map(|r| tiny_bias(k, r)).collect();
                (w, b)
            })
            .collect();
        Self { layers }
    }

    /// Copies the hand weights into the engine's parameter layout.
    pub fn to_params(&self) -> ModelParams {
        let cfg = tiny_config();
        let mut params = ModelParams::zeros(&cfg);
        for (layer, (w, b)) in params.layers.iter_mut().zip(&self.layers) {
            layer.weights = w.iter().flatten().copied().collect();
            layer.bias = b.clone();
        }
        params
    }

    fn dense(&self, k: usize, x: &[f64], relu: bool) -> Vec<f64> {
        let (w, b) = &self.layers[k];
        let mut out = Vec::new();
        for r in 0..w.len() {
            let mut acc = b[r];
            for c in 0..x.len() {
                acc += w[r][c] * x[c];
            }
            out.push(if relu && acc < 0.0 { 0.0 } else { acc });
        }
        out
    }

    /// Straight-line evaluation: sentence path, text path, concatenate,
    /// head, sigmoid.
    pub fn probability(&self, sentence: [f64; 2], whole: [f64; 2]) -> f64 {
        let s1 = self.dense(0, &sentence, true);
        let s2 = self.dense(1, &s1, true);
        let s3 = self.dense(2, &s2, true);
        let t1 = self.dense(3, &whole, true);
        let t2 = self.dense(4, &t1, true);
        let t3 = self.dense(5, &t2, true);
        let mut joined = s3.clone();
        joined.extend(t3);
        let h1 = self.dense(6, &joined, true);
        let h2 = self.dense(7, &h1, true);
        let z = self.dense(8, &h2, false)[0];
        1.0 / (1.0 + (-z).exp())
    }
}

/// Brute-force confusion counting and metric formulas.
pub struct BruteMetrics {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn brute_metrics(preds: &[bool], labels: &[bool]) -> BruteMetrics {
    let (mut tp, mut fp, mut tn, mut fn_) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..preds.len() {
        if preds[i] && labels[i] {
            tp += 1;
        } else if preds[i] && !labels[i] {
            fp += 1;
        } else if !preds[i] && !labels[i] {
            tn += 1;
        } else {
            fn_ += 1;
        }
    }
    let n = preds.len() as f64;
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BruteMetrics {
        tp,
        fp,
        tn,
        fn_,
        accuracy: (tp + tn) as f64 / n,
        precision,
        recall,
        f1,
    }
}

/// 200 mock-encoded texts labelled by the sign of a fixed projection of the
/// whole-text vector, so the set is linearly separable by construction.
pub fn separable_set(dim: usize, n: usize) -> (Vec<EmbeddingRecord>, Vec<bool>) {
    use humor_core::encoder::{encode_record, mock_encode, EncoderConfig, MockEncoder};
    use humor_core::textprep::{preprocess, ContractionTable};

    let table = ContractionTable::english();
    let encoder = MockEncoder::new(dim);
    let cfg = EncoderConfig {
        dim,
        ..Default::default()
    };
    let direction = mock_encode("separating direction", dim);
    let mut records = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let text = if i % 3 == 0 {
            format!("Synthetic example number {i} has one sentence.")
        } else {
            format!("Synthetic example {i} opens here. Then comes line {}!", i * 7)
        };
        let rec = encode_record(&encoder, i as u64, &preprocess(&text, &table), &cfg).unwrap();
        let score: f64 = rec
            .whole_text
            .as_slice()
            .iter()
            .zip(direction.as_slice())
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        labels.push(score > 0.0);
        records.push(rec);
    }
    (records, labels)
}
