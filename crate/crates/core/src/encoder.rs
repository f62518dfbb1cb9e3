//! Sentence embedding backends.
//!
//! The classifier only ever sees fixed-size vectors. They come from a
//! deterministic hash-seeded mock, from a lookup table of precomputed
//! vectors, or from an [`EmbeddingStore`](crate::store::EmbeddingStore)
//! file written by the offline exporter.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::textprep::CleanText;

pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_MAX_SEQ_LEN: usize = 100;
pub const DEFAULT_MAX_SENTENCES: usize = 3;
/// Hard limit of the upstream transformer.
pub const MAX_SEQ_LEN_LIMIT: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("text not present in the embedding table: {0:?}")]
    NotInStore(String),
    #[error("embedding dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("cannot encode a record without sentences")]
    NoSentences,
    #[error("invalid encoder config: {0}")]
    InvalidConfig(String),
}

/// A finite vector of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EncodeError> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Self(values))
        } else {
            Err(EncodeError::NonFinite)
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }
}

/// Whole-text vector plus one vector per kept sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub example_id: u64,
    pub whole_text: EmbeddingVector,
    pub sentence_vectors: Vec<EmbeddingVector>,
}

impl EmbeddingRecord {
    pub fn dim(&self) -> usize {
        self.whole_text.dim()
    }

    /// Checks that every vector shares the whole-text dimension and that at
    /// least one sentence is present.
    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.sentence_vectors.is_empty() {
            return Err(EncodeError::NoSentences);
        }
        let dim = self.dim();
        for v in &self.sentence_vectors {
            if v.dim() != dim {
                return Err(EncodeError::DimMismatch {
                    expected: dim,
                    found: v.dim(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub dim: usize,
    /// Token cap applied by the exporter before pooling.
    pub max_seq_len: usize,
    /// Sentences past this count are dropped.
    pub max_sentences: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            max_seq_len: DEFAULT_MAX_SEQ_LEN,
            max_sentences: DEFAULT_MAX_SENTENCES,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), EncodeError> {
        if self.dim == 0 {
            return Err(EncodeError::InvalidConfig("dim must be positive".into()));
        }
        if self.max_seq_len == 0 || self.max_seq_len > MAX_SEQ_LEN_LIMIT {
            return Err(EncodeError::InvalidConfig(format!(
                "max_seq_len must lie in 1..={MAX_SEQ_LEN_LIMIT}, got {}",
                self.max_seq_len
            )));
        }
        if self.max_sentences == 0 || self.max_sentences > u8::MAX as usize {
            return Err(EncodeError::InvalidConfig(format!(
                "max_sentences must lie in 1..=255, got {}",
                self.max_sentences
            )));
        }
        Ok(())
    }
}

/// Maps a piece of text to an embedding. Empty text maps to the zero vector.
pub trait Encoder: Send + Sync {
    fn dim(&self) -> usize;

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError>;
}

/// Unit-norm pseudo-random vector seeded by the SHA-256 of the text.
pub fn mock_encode(text: &str, dim: usize) -> EmbeddingVector {
    let seed: [u8; 32] = Sha256::digest(text.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
    EmbeddingVector(raw.iter().map(|v| (v * scale) as f32).collect())
}

/// Deterministic stand-in for the frozen transformer.
#[derive(Debug, Clone, Copy)]
pub struct MockEncoder {
    dim: usize,
}

impl MockEncoder {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Encoder for MockEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError> {
        if text.is_empty() {
            return Ok(EmbeddingVector::zeros(self.dim));
        }
        Ok(mock_encode(text, self.dim))
    }
}

/// Pass-through backend over vectors computed elsewhere, keyed by text.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedEncoder {
    dim: usize,
    table: HashMap<String, EmbeddingVector>,
}

impl PrecomputedEncoder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            table: HashMap::new(),
        }
    }

    pub fn insert(&mut self, text: impl Into<String>, vector: EmbeddingVector) -> Result<(), EncodeError> {
        if vector.dim() != self.dim {
            return Err(EncodeError::DimMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        self.table.insert(text.into(), vector);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Encoder for PrecomputedEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EncodeError> {
        if text.is_empty() {
            return Ok(EmbeddingVector::zeros(self.dim));
        }
        self.table
            .get(text)
            .cloned()
            .ok_or_else(|| EncodeError::NotInStore(text.to_string()))
    }
}

/// Encodes the whole cleaned text and each of its first
/// `cfg.max_sentences` sentences.
pub fn encode_record<E: Encoder + ?Sized>(
    encoder: &E,
    example_id: u64,
    clean: &CleanText,
    cfg: &EncoderConfig,
) -> Result<EmbeddingRecord, EncodeError> {
    if clean.sentences.is_empty() {
        return Err(EncodeError::NoSentences);
    }
    if encoder.dim() != cfg.dim {
        return Err(EncodeError::DimMismatch {
            expected: cfg.dim,
            found: encoder.dim(),
        });
    }
    let whole_text = encoder.encode(&clean.cleaned)?;
    let sentence_vectors = clean
        .sentences
        .iter()
        .take(cfg.max_sentences)
        .map(|s| encoder.encode(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EmbeddingRecord {
        example_id,
        whole_text,
        sentence_vectors,
    })
}
