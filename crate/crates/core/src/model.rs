//! Parallel-path classifier head.
//!
//! Every sentence slot owns a stack of dense ReLU layers ending in a
//! 20-wide feature vector; the whole text goes through its own stack that
//! ends 60 wide. The slot outputs (in slot order) and the text output are
//! concatenated and fed through the head, whose last layer is a single
//! sigmoid unit. Sentence slots without a sentence receive the zero vector.
//!
//! All arithmetic is done in `f64`. Parameters are kept on the `f32` grid
//! (initialization and every optimizer step round to it) so the `f32`
//! parameter file reproduces a model exactly.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::EmbeddingRecord;

pub const SENTENCE_FEATURES: usize = 20;
pub const TEXT_FEATURES: usize = 60;
pub const LOSS_EPS: f64 = 1e-7;
pub const DECISION_THRESHOLD: f64 = 0.5;

pub const PARAMS_MAGIC: [u8; 4] = *b"CBPM";
pub const PARAMS_VERSION: u16 = 1;

/// Records per gradient chunk. The chunking is fixed so the reduction
/// order does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("record {0} has no sentence vectors")]
    NoSentences(u64),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{records} records but {labels} labels")]
    LengthMismatch { records: usize, labels: usize },
    #[error("invalid training config: {0}")]
    InvalidTrainConfig(String),
    #[error("{}: bad magic {found:?}", path.display())]
    BadMagic { path: PathBuf, found: Vec<u8> },
    #[error("{}: unsupported version {found}", path.display())]
    VersionMismatch { path: PathBuf, found: u16 },
    #[error("{}: shape mismatch: {reason}", path.display())]
    ShapeMismatch { path: PathBuf, reason: String },
    #[error("{}: file truncated", path.display())]
    TruncatedFile { path: PathBuf },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    /// Number of parallel sentence paths.
    pub s_max: usize,
    pub sentence_path_sizes: Vec<usize>,
    pub text_path_sizes: Vec<usize>,
    pub head_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 768,
            s_max: 3,
            sentence_path_sizes: vec![128, 64, SENTENCE_FEATURES],
            text_path_sizes: vec![256, 128, TEXT_FEATURES],
            head_sizes: vec![128, 32, 1],
            activation: Activation::Relu,
            seed: 42,
        }
    }
}

/// Where a layer sits in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerRole {
    Sentence { path: usize, depth: usize },
    Text { depth: usize },
    Head { depth: usize },
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.s_max == 0 || self.s_max > u8::MAX as usize {
            return bad(format!("s_max must lie in 1..=255, got {}", self.s_max));
        }
        for (name, sizes, last) in [
            ("sentence_path_sizes", &self.sentence_path_sizes, SENTENCE_FEATURES),
            ("text_path_sizes", &self.text_path_sizes, TEXT_FEATURES),
            ("head_sizes", &self.head_sizes, 1),
        ] {
            if sizes.is_empty() || sizes.contains(&0) {
                return bad(format!("{name} must be non-empty and positive: {sizes:?}"));
            }
            if sizes[sizes.len() - 1] != last {
                return bad(format!("{name} must end in {last}, got {sizes:?}"));
            }
        }
        Ok(())
    }

    /// Width of the concatenated path outputs entering the head.
    pub fn head_input_width(&self) -> usize {
        self.s_max * SENTENCE_FEATURES + TEXT_FEATURES
    }

    /// `(role, inputs, outputs)` for every layer in storage order:
    /// sentence paths ascending, then the text path, then the head.
    pub fn layer_shapes(&self) -> Vec<(LayerRole, usize, usize)> {
        let mut shapes = Vec::new();
        for path in 0..self.s_max {
            let mut inputs = self.dim;
            for (depth, &out) in self.sentence_path_sizes.iter().enumerate() {
                shapes.push((LayerRole::Sentence { path, depth }, inputs, out));
                inputs = out;
            }
        }
        let mut inputs = self.dim;
        for (depth, &out) in self.text_path_sizes.iter().enumerate() {
            shapes.push((LayerRole::Text { depth }, inputs, out));
            inputs = out;
        }
        let mut inputs = self.head_input_width();
        for (depth, &out) in self.head_sizes.iter().enumerate() {
            shapes.push((LayerRole::Head { depth }, inputs, out));
            inputs = out;
        }
        shapes
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|&(_, i, o)| i * o + o).sum()
    }

    fn sentence_layer(&self, path: usize, depth: usize) -> usize {
        path * self.sentence_path_sizes.len() + depth
    }

    fn text_layer(&self, depth: usize) -> usize {
        self.s_max * self.sentence_path_sizes.len() + depth
    }

    fn head_layer(&self, depth: usize) -> usize {
        self.s_max * self.sentence_path_sizes.len() + self.text_path_sizes.len() + depth
    }
}

/// One fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Accumulates `dz x input` into this layer's gradient and optionally
    /// returns the gradient with respect to the input.
    fn accumulate(&self, grad: &mut DenseLayer, input: &[f64], dz: &[f64], want_input_grad: bool) -> Option<Vec<f64>> {
        for ((row, &d), gb) in grad.weights.chunks_exact_mut(self.inputs).zip(dz).zip(&mut grad.bias) {
            *gb += d;
            if d != 0.0 {
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
        }
        want_input_grad.then(|| {
            let mut dx = vec![0.0; self.inputs];
            for (row, &d) in self.weights.chunks_exact(self.inputs).zip(dz) {
                if d != 0.0 {
                    for (g, &w) in dx.iter_mut().zip(row) {
                        *g += d * w;
                    }
                }
            }
            dx
        })
    }
}

/// All trainable weights, in [`ModelConfig::layer_shapes`] order. The same
/// type carries gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<DenseLayer>,
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            layers: cfg
                .layer_shapes()
                .into_iter()
                .map(|(_, i, o)| DenseLayer::zeros(i, o))
                .collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn add_assign(&mut self, other: &ModelParams) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in self.values_mut() {
            *v *= factor;
        }
    }

    /// Checks layer shapes against `cfg`.
    pub fn check_shapes(&self, cfg: &ModelConfig) -> std::result::Result<(), String> {
        let shapes = cfg.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(format!("expected {} layers, found {}", shapes.len(), self.layers.len()));
        }
        for (k, ((_, i, o), l)) in shapes.iter().zip(&self.layers).enumerate() {
            if l.inputs != *i || l.outputs != *o || l.weights.len() != i * o || l.bias.len() != *o {
                return Err(format!(
                    "layer {k}: expected {i}->{o}, found {}->{} with {} weights",
                    l.inputs,
                    l.outputs,
                    l.weights.len()
                ));
            }
        }
        Ok(())
    }
}

fn to_f32_grid(v: f64) -> f64 {
    v as f32 as f64
}

/// Seeded uniform He initialization: weights in `±sqrt(6 / fan_in)`,
/// biases zero.
pub fn init(cfg: &ModelConfig) -> Result<ModelParams> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::zeros(cfg);
    for layer in &mut params.layers {
        let limit = (6.0 / layer.inputs as f64).sqrt();
        for w in &mut layer.weights {
            *w = to_f32_grid(rng.gen_range(-limit..limit));
        }
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub probability: f64,
    pub label: bool,
}

impl Prediction {
    pub fn from_probability(probability: f64) -> Self {
        Self {
            probability,
            label: probability >= DECISION_THRESHOLD,
        }
    }
}

/// Inputs and post-activation outputs of every layer, kept for backward.
#[derive(Debug, Clone)]
pub struct Activations {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    pub probability: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn check_record(record: &EmbeddingRecord, cfg: &ModelConfig) -> Result<()> {
    if record.sentence_vectors.is_empty() {
        return Err(ModelError::NoSentences(record.example_id));
    }
    for v in std::iter::once(&record.whole_text).chain(&record.sentence_vectors) {
        if v.dim() != cfg.dim {
            return Err(ModelError::DimMismatch {
                expected: cfg.dim,
                found: v.dim(),
            });
        }
    }
    Ok(())
}

/// Runs the network on one record. Sentences past `s_max` are ignored.
pub fn forward(params: &ModelParams, record: &EmbeddingRecord, cfg: &ModelConfig) -> Result<(Prediction, Activations)> {
    check_record(record, cfg)?;
    let n_layers = params.layers.len();
    let mut inputs = vec![Vec::new(); n_layers];
    let mut outputs = vec![Vec::new(); n_layers];

    let mut run_stack = |first: usize, depth: usize, x: Vec<f64>| -> Vec<f64> {
        let mut x = x;
        for k in first..first + depth {
            let mut z = params.layers[k].affine(&x);
            relu_in_place(&mut z);
            inputs[k] = x;
            x = z.clone();
            outputs[k] = z;
        }
        x
    };

    let mut concat = Vec::with_capacity(cfg.head_input_width());
    let sentence_depth = cfg.sentence_path_sizes.len();
    for path in 0..cfg.s_max {
        let x = match record.sentence_vectors.get(path) {
            Some(v) => to_f64(v.as_slice()),
            None => vec![0.0; cfg.dim],
        };
        concat.extend(run_stack(cfg.sentence_layer(path, 0), sentence_depth, x));
    }
    concat.extend(run_stack(
        cfg.text_layer(0),
        cfg.text_path_sizes.len(),
        to_f64(record.whole_text.as_slice()),
    ));

    let head_depth = cfg.head_sizes.len();
    let hidden = run_stack(cfg.head_layer(0), head_depth - 1, concat);
    let last = cfg.head_layer(head_depth - 1);
    let z = params.layers[last].affine(&hidden)[0];
    let probability = sigmoid(z);
    inputs[last] = hidden;
    outputs[last] = vec![probability];

    let prediction = Prediction::from_probability(probability);
    Ok((
        prediction,
        Activations {
            inputs,
            outputs,
            probability,
        },
    ))
}

/// Binary cross-entropy with the probability clamped to `[eps, 1 - eps]`.
pub fn loss(probability: f64, label: bool) -> f64 {
    let p = probability.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Gradient of [`loss`] for one record with respect to every parameter.
pub fn backward(params: &ModelParams, acts: &Activations, label: bool, cfg: &ModelConfig) -> ModelParams {
    let mut grad = ModelParams::zeros(cfg);
    backward_into(params, acts, label, cfg, &mut grad);
    grad
}

fn backward_into(params: &ModelParams, acts: &Activations, label: bool, cfg: &ModelConfig, grad: &mut ModelParams) {
    let p = acts.probability;
    let y = if label { 1.0 } else { 0.0 };
    // d(loss)/d(logit); zero where the clamp is active
    let dz_out = if (LOSS_EPS..=1.0 - LOSS_EPS).contains(&p) {
        p - y
    } else {
        0.0
    };

    let mut back_stack =
        |first: usize, depth: usize, dz_top: Vec<f64>, sigmoid_top: bool, want_input: bool| -> Option<Vec<f64>> {
            let mut dz = dz_top;
            let mut result = None;
            for k in (first..first + depth).rev() {
                let is_top = k == first + depth - 1;
                if !(is_top && sigmoid_top) {
                    for (d, &a) in dz.iter_mut().zip(&acts.outputs[k]) {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                let need_dx = k > first || want_input;
                let dx = params.layers[k].accumulate(&mut grad.layers[k], &acts.inputs[k], &dz, need_dx);
                if k > first {
                    dz = dx.expect("input gradient requested");
                } else {
                    result = dx;
                }
            }
            result
        };

    let d_concat =
        back_stack(cfg.head_layer(0), cfg.head_sizes.len(), vec![dz_out], true, true).expect("head input gradient");
    let (d_sentences, d_text) = d_concat.split_at(cfg.s_max * SENTENCE_FEATURES);
    for (path, chunk) in d_sentences.chunks_exact(SENTENCE_FEATURES).enumerate() {
        back_stack(
            cfg.sentence_layer(path, 0),
            cfg.sentence_path_sizes.len(),
            chunk.to_vec(),
            false,
            false,
        );
    }
    back_stack(
        cfg.text_layer(0),
        cfg.text_path_sizes.len(),
        d_text.to_vec(),
        false,
        false,
    );
}

/// Mean loss and mean gradient over a batch. Per-record gradients are
/// summed in fixed chunks of records and the chunk sums are added in
/// order, so the result is independent of scheduling.
pub fn batch_gradient(
    params: &ModelParams,
    records: &[&EmbeddingRecord],
    labels: &[bool],
    cfg: &ModelConfig,
) -> Result<(ModelParams, f64)> {
    if records.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            records: records.len(),
            labels: labels.len(),
        });
    }
    if records.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let partials: Vec<Result<(ModelParams, f64)>> = records
        .par_chunks(GRAD_CHUNK)
        .zip(labels.par_chunks(GRAD_CHUNK))
        .map(|(recs, labs)| {
            let mut grad = ModelParams::zeros(cfg);
            let mut loss_sum = 0.0;
            for (rec, &label) in recs.iter().zip(labs) {
                let (_, acts) = forward(params, rec, cfg)?;
                loss_sum += loss(acts.probability, label);
                backward_into(params, &acts, label, cfg, &mut grad);
            }
            Ok((grad, loss_sum))
        })
        .collect();
    let mut total = ModelParams::zeros(cfg);
    let mut loss_sum = 0.0;
    for part in partials {
        let (g, l) = part?;
        total.add_assign(&g);
        loss_sum += l;
    }
    let n = records.len() as f64;
    total.scale(1.0 / n);
    Ok((total, loss_sum / n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ModelError::InvalidTrainConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&self.adam_beta1) && (0.0..1.0).contains(&self.adam_beta2)) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return bad("adam_eps must be positive");
        }
        Ok(())
    }
}

/// Adam state over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    /// One bias-corrected Adam update; parameters land back on the f32 grid.
    pub fn step(&mut self, params: &mut ModelParams, grad: &ModelParams) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params.values_mut().zip(grad.values()).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p = to_f32_grid(*p - self.lr * m_hat / (v_hat.sqrt() + self.eps));
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean training loss of each epoch, measured on the fly.
    pub history: Vec<f64>,
}

/// Mini-batch Adam training with a seeded reshuffle every epoch.
pub fn train(
    params: ModelParams,
    records: &[EmbeddingRecord],
    labels: &[bool],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_progress(params, records, labels, model_cfg, train_cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean loss)` after each epoch.
pub fn train_with_progress(
    mut params: ModelParams,
    records: &[EmbeddingRecord],
    labels: &[bool],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    if records.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if records.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            records: records.len(),
            labels: labels.len(),
        });
    }
    params.check_shapes(model_cfg).map_err(ModelError::InvalidConfig)?;
    for r in records {
        check_record(r, model_cfg)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(train_cfg.seed);
    let mut adam = Adam::new(params.len(), train_cfg);
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut history = Vec::with_capacity(train_cfg.epochs);
    for epoch in 0..train_cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(train_cfg.batch_size) {
            let recs: Vec<&EmbeddingRecord> = batch.iter().map(|&i| &records[i]).collect();
            let labs: Vec<bool> = batch.iter().map(|&i| labels[i]).collect();
            let (grad, mean_loss) = batch_gradient(&params, &recs, &labs, model_cfg)?;
            loss_sum += mean_loss * batch.len() as f64;
            adam.step(&mut params, &grad);
        }
        let epoch_loss = loss_sum / records.len() as f64;
        history.push(epoch_loss);
        on_epoch(epoch, epoch_loss);
    }
    Ok(TrainOutcome { params, history })
}

pub fn predict(params: &ModelParams, record: &EmbeddingRecord, cfg: &ModelConfig) -> Result<Prediction> {
    forward(params, record, cfg).map(|(p, _)| p)
}

/// Predictions in input order.
pub fn predict_batch(params: &ModelParams, records: &[EmbeddingRecord], cfg: &ModelConfig) -> Result<Vec<Prediction>> {
    records.par_iter().map(|r| predict(params, r, cfg)).collect()
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend((v as u32).to_le_bytes());
}

fn encode_config(buf: &mut Vec<u8>, cfg: &ModelConfig) {
    put_u32(buf, cfg.dim);
    put_u32(buf, cfg.s_max);
    buf.push(match cfg.activation {
        Activation::Relu => 0,
    });
    buf.extend(cfg.seed.to_le_bytes());
    for sizes in [&cfg.sentence_path_sizes, &cfg.text_path_sizes, &cfg.head_sizes] {
        put_u32(buf, sizes.len());
        for &s in sizes {
            put_u32(buf, s);
        }
    }
}

/// Serializes the config and every layer (weights row-major, then bias)
/// as little-endian `f32`.
pub fn params_to_bytes(params: &ModelParams, cfg: &ModelConfig) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + params.len() * 4);
    buf.extend(PARAMS_MAGIC);
    buf.extend(PARAMS_VERSION.to_le_bytes());
    encode_config(&mut buf, cfg);
    for layer in &params.layers {
        for &v in layer.weights.iter().chain(&layer.bias) {
            buf.extend((v as f32).to_le_bytes());
        }
    }
    buf
}

pub fn save_params(path: &Path, params: &ModelParams, cfg: &ModelConfig) -> Result<()> {
    cfg.validate()?;
    params.check_shapes(cfg).map_err(ModelError::InvalidConfig)?;
    fs::write(path, params_to_bytes(params, cfg)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(ModelError::TruncatedFile {
                path: self.path.to_path_buf(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f32(&mut self) -> Result<f64> {
        let b = self.take(4)?;
        Ok(f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
    }
}

/// Parses a parameter file image, validating shapes against the embedded
/// config.
pub fn params_from_bytes(bytes: &[u8], path: &Path) -> Result<(ModelParams, ModelConfig)> {
    let mut cur = Cursor { bytes, pos: 0, path };
    let magic = cur.take(4)?;
    if magic != PARAMS_MAGIC {
        return Err(ModelError::BadMagic {
            path: path.to_path_buf(),
            found: magic.to_vec(),
        });
    }
    let v = cur.take(2)?;
    let version = u16::from_le_bytes([v[0], v[1]]);
    if version != PARAMS_VERSION {
        return Err(ModelError::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
        });
    }
    let shape_err = |reason: String| ModelError::ShapeMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let dim = cur.u32()?;
    let s_max = cur.u32()?;
    let activation = match cur.take(1)?[0] {
        0 => Activation::Relu,
        other => return Err(shape_err(format!("unknown activation code {other}"))),
    };
    let s = cur.take(8)?;
    let seed = u64::from_le_bytes(s.try_into().expect("8 bytes"));
    let mut lists = Vec::with_capacity(3);
    for _ in 0..3 {
        let n = cur.u32()?;
        if n > 1024 {
            return Err(shape_err(format!("implausible layer count {n}")));
        }
        lists.push((0..n).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?);
    }
    let head_sizes = lists.pop().expect("three lists");
    let text_path_sizes = lists.pop().expect("three lists");
    let sentence_path_sizes = lists.pop().expect("three lists");
    let cfg = ModelConfig {
        dim,
        s_max,
        sentence_path_sizes,
        text_path_sizes,
        head_sizes,
        activation,
        seed,
    };
    cfg.validate().map_err(|e| shape_err(e.to_string()))?;

    let mut params = ModelParams::zeros(&cfg);
    for layer in &mut params.layers {
        for v in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *v = cur.f32()?;
        }
    }
    if cur.pos != bytes.len() {
        return Err(shape_err(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - cur.pos
        )));
    }
    if params.values().any(|v| !v.is_finite()) {
        return Err(shape_err("non-finite parameter".into()));
    }
    Ok((params, cfg))
}

pub fn load_params(path: &Path) -> Result<(ModelParams, ModelConfig)> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    params_from_bytes(&bytes, path)
}
