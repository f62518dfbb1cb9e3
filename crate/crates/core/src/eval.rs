//! Classification metrics and the multinomial Naive Bayes baseline.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{self, ContractionTable};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("nothing to evaluate")]
    EmptyInput,
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("training documents contain no tokens")]
    EmptyVocabulary,
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Positive class is humor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    /// Set when precision had a zero denominator and was reported as 0.
    #[serde(skip)]
    pub precision_undefined: bool,
    /// Set when recall had a zero denominator and was reported as 0.
    #[serde(skip)]
    pub recall_undefined: bool,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

impl EvalMetrics {
    pub fn from_counts(counts: ConfusionCounts) -> Result<Self> {
        let n = counts.total();
        if n == 0 {
            return Err(EvalError::EmptyInput);
        }
        let accuracy = (counts.tp + counts.tn) as f64 / n as f64;
        let (precision, precision_undefined) = ratio(counts.tp, counts.tp + counts.fp);
        let (recall, recall_undefined) = ratio(counts.tp, counts.tp + counts.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Ok(Self {
            accuracy,
            precision,
            recall,
            f1,
            counts,
            precision_undefined,
            recall_undefined,
        })
    }

    pub fn has_warnings(&self) -> bool {
        self.precision_undefined || self.recall_undefined
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }

    /// Column header matching [`EvalMetrics::table_row`].
    pub fn table_header() -> String {
        format!(
            "{:<16} {:<24} {:>8} {:>9} {:>6} {:>6}",
            "Method", "Configuration", "Accuracy", "Precision", "Recall", "F1"
        )
    }

    pub fn table_row(&self, method: &str, configuration: &str) -> String {
        format!(
            "{:<16} {:<24} {:>8.3} {:>9.3} {:>6.3} {:>6.3}",
            method, configuration, self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

impl fmt::Display for EvalMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "accuracy={:.4} precision={:.4} recall={:.4} f1={:.4}",
            self.accuracy, self.precision, self.recall, self.f1
        )
    }
}

pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        counts.record(p, y);
    }
    Ok(counts)
}

pub fn compute_metrics(predictions: &[bool], labels: &[bool]) -> Result<EvalMetrics> {
    if predictions.is_empty() && labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    EvalMetrics::from_counts(confusion(predictions, labels)?)
}

/// Applies `predict` to every example and scores the result.
pub fn evaluate_model<T, E, F>(mut predict: F, examples: &[(T, bool)]) -> std::result::Result<EvalMetrics, E>
where
    F: FnMut(&T) -> std::result::Result<bool, E>,
    E: From<EvalError>,
{
    if examples.is_empty() {
        return Err(EvalError::EmptyInput.into());
    }
    let mut counts = ConfusionCounts::default();
    for (item, label) in examples {
        counts.record(predict(item)?, *label);
    }
    Ok(EvalMetrics::from_counts(counts)?)
}

pub const DEFAULT_NB_ALPHA: f64 = 0.2;

/// Lower-cased whitespace tokens of the cleaned text.
pub fn nb_tokens(text: &str, table: &ContractionTable) -> Vec<String> {
    textprep::preprocess(text, table)
        .cleaned
        .split_whitespace()
        .map(str::to_lowercase)
        .collect()
}

/// Bag-of-words multinomial Naive Bayes with additive smoothing.
/// Index 0 holds the negative class, index 1 the positive (humor) class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBModel {
    pub vocabulary: HashMap<String, usize>,
    pub token_counts: [Vec<u64>; 2],
    pub class_totals: [u64; 2],
    pub class_docs: [u64; 2],
    pub priors: [f64; 2],
    pub alpha: f64,
}

fn class_index(label: bool) -> usize {
    usize::from(label)
}

impl NBModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn denominator(&self, class: usize) -> f64 {
        self.class_totals[class] as f64 + self.alpha * self.vocab_size() as f64
    }

    /// Smoothed `ln P(token | class)`; unseen tokens get the zero-count value.
    pub fn log_likelihood(&self, token: &str, label: bool) -> f64 {
        let c = class_index(label);
        let count = self.vocabulary.get(token).map_or(0, |&i| self.token_counts[c][i]);
        ((count as f64 + self.alpha) / self.denominator(c)).ln()
    }

    pub fn log_prior(&self, label: bool) -> f64 {
        self.priors[class_index(label)].ln()
    }

    /// Unnormalized log posterior of `label` for pre-tokenized input.
    pub fn score_tokens<S: AsRef<str>>(&self, tokens: &[S], label: bool) -> f64 {
        let mut score = self.log_prior(label);
        for t in tokens {
            score += self.log_likelihood(t.as_ref(), label);
        }
        score
    }
}

/// Fits on pre-tokenized documents.
pub fn nb_fit_tokens<S: AsRef<str>>(docs: &[Vec<S>], labels: &[bool], alpha: f64) -> Result<NBModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(EvalError::InvalidAlpha(alpha));
    }
    if docs.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            predictions: docs.len(),
            labels: labels.len(),
        });
    }
    if docs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut vocabulary: HashMap<String, usize> = HashMap::new();
    let mut token_counts: [Vec<u64>; 2] = [Vec::new(), Vec::new()];
    let mut class_totals = [0u64; 2];
    let mut class_docs = [0u64; 2];
    for (doc, &label) in docs.iter().zip(labels) {
        let c = class_index(label);
        class_docs[c] += 1;
        for token in doc {
            let next = vocabulary.len();
            let idx = *vocabulary.entry(token.as_ref().to_string()).or_insert(next);
            if idx == token_counts[0].len() {
                token_counts[0].push(0);
                token_counts[1].push(0);
            }
            token_counts[c][idx] += 1;
            class_totals[c] += 1;
        }
    }
    if vocabulary.is_empty() {
        return Err(EvalError::EmptyVocabulary);
    }
    let n = docs.len() as f64;
    let priors = [class_docs[0] as f64 / n, class_docs[1] as f64 / n];
    Ok(NBModel {
        vocabulary,
        token_counts,
        class_totals,
        class_docs,
        priors,
        alpha,
    })
}

pub fn nb_fit<S: AsRef<str>>(texts: &[S], labels: &[bool], alpha: f64) -> Result<NBModel> {
    let table = ContractionTable::english();
    let docs: Vec<Vec<String>> = texts.iter().map(|t| nb_tokens(t.as_ref(), &table)).collect();
    nb_fit_tokens(&docs, labels, alpha)
}

/// Positive only when the humor posterior is strictly larger.
pub fn nb_predict_tokens<S: AsRef<str>>(model: &NBModel, tokens: &[S]) -> bool {
    model.score_tokens(tokens, true) > model.score_tokens(tokens, false)
}

pub fn nb_predict(model: &NBModel, text: &str) -> bool {
    let table = ContractionTable::english();
    nb_predict_tokens(model, &nb_tokens(text, &table))
}
