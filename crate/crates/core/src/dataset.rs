//! Building the balanced humor / non-humor dataset from two raw sources,
//! splitting it, and describing its surface statistics.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{self, ContractionTable};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{source_name}: only {survivors} rows survive filtering, {required} required")]
    NotEnoughRows {
        source_name: Source,
        survivors: usize,
        required: usize,
    },
    #[error("{}: no column named {column:?}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: {reason}", path.display())]
    BadCsv { path: PathBuf, reason: String },
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("cannot compute statistics of an empty dataset")]
    EmptyInput,
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Jokes,
    News,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Jokes => "jokes",
            Source::News => "news",
        })
    }
}

/// One short text with its humor label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub text: String,
    /// `true` for humor.
    pub label: bool,
    pub source: Source,
}

/// Anything that carries a binary humor label.
pub trait Labeled {
    fn label(&self) -> bool;
}

impl Labeled for LabeledExample {
    fn label(&self) -> bool {
        self.label
    }
}

impl<T> Labeled for (T, bool) {
    fn label(&self) -> bool {
        self.1
    }
}

/// Length cuts and sampling size. Both ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    pub min_words: usize,
    pub max_words: usize,
    pub rows_per_class: usize,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_chars: 30,
            max_chars: 100,
            min_words: 10,
            max_words: 18,
            rows_per_class: 100_000,
            seed: 42,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_chars > self.max_chars {
            return Err(DatasetError::InvalidConfig(format!(
                "min_chars {} > max_chars {}",
                self.min_chars, self.max_chars
            )));
        }
        if self.min_words > self.max_words {
            return Err(DatasetError::InvalidConfig(format!(
                "min_words {} > max_words {}",
                self.min_words, self.max_words
            )));
        }
        if self.rows_per_class == 0 {
            return Err(DatasetError::InvalidConfig("rows_per_class must be positive".into()));
        }
        Ok(())
    }

    pub fn accepts(&self, text: &str) -> bool {
        let chars = char_count(text);
        let words = word_count(text);
        (self.min_chars..=self.max_chars).contains(&chars) && (self.min_words..=self.max_words).contains(&words)
    }
}

pub fn char_count(text: &str) -> usize {
    text.chars().count()
}

/// Whitespace-delimited tokens of the raw text.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A raw source file and the name of its text column.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: PathBuf,
    pub column: String,
}

impl SourceFile {
    pub fn new(path: impl Into<PathBuf>, column: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            column: column.into(),
        }
    }
}

/// Drops repeated rows (compared after trimming outer whitespace), keeping
/// the first occurrence in its original position. Rows come back trimmed.
pub fn dedup(rows: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::with_capacity(rows.len());
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let trimmed = row.trim();
        if seen.insert(trimmed.to_string()) {
            out.push(if trimmed.len() == row.len() {
                row
            } else {
                trimmed.to_string()
            });
        }
    }
    out
}

pub fn apply_filters(rows: Vec<String>, cfg: &FilterConfig) -> Vec<String> {
    rows.into_iter().filter(|r| cfg.accepts(r)).collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::MissingFile(path.to_path_buf())
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

fn csv_err(path: &Path, err: csv::Error) -> DatasetError {
    match err.into_kind() {
        csv::ErrorKind::Io(e) => io_err(path)(e),
        other => DatasetError::BadCsv {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

/// Reads one named column from a headed CSV file.
pub fn read_text_column(src: &SourceFile) -> Result<Vec<String>> {
    let path = src.path.as_path();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == src.column)
        .ok_or_else(|| DatasetError::MissingColumn {
            path: path.to_path_buf(),
            column: src.column.clone(),
        })?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        rows.push(record.get(col).unwrap_or_default().to_string());
    }
    Ok(rows)
}

fn sample_rows(rows: Vec<String>, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut picked = index::sample(rng, rows.len(), n).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<String>> = rows.into_iter().map(Some).collect();
    picked.into_iter().map(|i| slots[i].take().unwrap()).collect()
}

fn survivors(src: &SourceFile, cfg: &FilterConfig) -> Result<Vec<String>> {
    Ok(apply_filters(dedup(read_text_column(src)?), cfg))
}

/// Runs the whole curation pipeline: dedup, length cuts, sentence case for
/// news headlines, seeded per-source sampling, merge and shuffle.
pub fn build(jokes: &SourceFile, news: &SourceFile, cfg: &FilterConfig) -> Result<Vec<LabeledExample>> {
    cfg.validate()?;
    let joke_rows = survivors(jokes, cfg)?;
    let news_rows: Vec<String> = survivors(news, cfg)?
        .iter()
        .map(|r| textprep::to_sentence_case(r))
        .collect();
    for (source_name, rows) in [(Source::Jokes, &joke_rows), (Source::News, &news_rows)] {
        if rows.len() < cfg.rows_per_class {
            return Err(DatasetError::NotEnoughRows {
                source_name,
                survivors: rows.len(),
                required: cfg.rows_per_class,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jokes = sample_rows(joke_rows, cfg.rows_per_class, &mut rng);
    let news = sample_rows(news_rows, cfg.rows_per_class, &mut rng);
    let mut merged: Vec<LabeledExample> = jokes
        .into_iter()
        .map(|text| LabeledExample {
            text,
            label: true,
            source: Source::Jokes,
        })
        .chain(news.into_iter().map(|text| LabeledExample {
            text,
            label: false,
            source: Source::News,
        }))
        .collect();
    merged.shuffle(&mut rng);
    Ok(merged)
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetRow {
    text: String,
    humor: bool,
}

/// Writes the `text,humor` CSV layout.
pub fn write_dataset(path: &Path, examples: &[LabeledExample]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for ex in examples {
        writer
            .serialize(DatasetRow {
                text: ex.text.clone(),
                humor: ex.label,
            })
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a `text,humor` CSV. The source is inferred from the label.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    for column in ["text", "humor"] {
        if !headers.iter().any(|h| h == column) {
            return Err(DatasetError::MissingColumn {
                path: path.to_path_buf(),
                column: column.to_string(),
            });
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<RawRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let label = parse_bool(&row.humor).ok_or_else(|| DatasetError::BadCsv {
            path: path.to_path_buf(),
            reason: format!("humor value {:?} is not a boolean", row.humor),
        })?;
        out.push(LabeledExample {
            text: row.text,
            label,
            source: if label { Source::Jokes } else { Source::News },
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawRow {
    text: String,
    humor: String,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Seeded label-stratified shuffle split. The train part holds exactly
/// `floor(n * train_fraction)` items, and each label is spread across the
/// two parts in proportion to its share of the input.
pub fn split<T: Labeled>(examples: Vec<T>, train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(train_fraction));
    }
    let n = examples.len();
    let n_train = (n as f64 * train_fraction).floor() as usize;
    let (mut pos, mut neg): (Vec<T>, Vec<T>) = examples.into_iter().partition(|e| e.label());
    let pos_train = if n == 0 {
        0
    } else {
        ((pos.len() as u128 * n_train as u128 + n as u128 / 2) / n as u128) as usize
    };
    let neg_train = n_train - pos_train;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let pos_test = pos.split_off(pos_train);
    let neg_test = neg.split_off(neg_train);
    let mut train: Vec<T> = pos.into_iter().chain(neg).collect();
    let mut test: Vec<T> = pos_test.into_iter().chain(neg_test).collect();
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

/// Five-number summary of one statistic column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl ColumnStats {
    fn from_counts(mut values: Vec<usize>) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        values.sort_unstable();
        let mid = values.len() / 2;
        let median = if values.len() % 2 == 1 {
            values[mid] as f64
        } else {
            (values[mid - 1] + values[mid]) as f64 / 2.0
        };
        Self {
            mean,
            std: var.sqrt(),
            min: values[0] as f64,
            median,
            max: values[values.len() - 1] as f64,
        }
    }
}

/// Surface statistics per text, aggregated over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub chars: ColumnStats,
    pub words: ColumnStats,
    pub unique_words: ColumnStats,
    pub punctuation: ColumnStats,
    pub duplicate_words: ColumnStats,
    pub sentences: ColumnStats,
}

/// Per-text counts feeding [`DatasetStats`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub chars: usize,
    pub words: usize,
    pub unique_words: usize,
    pub punctuation: usize,
    pub duplicate_words: usize,
    pub sentences: usize,
}

pub fn text_counts(text: &str, table: &ContractionTable) -> TextCounts {
    let words: Vec<&str> = text.split_whitespace().collect();
    let unique: HashSet<&str> = words.iter().copied().collect();
    TextCounts {
        chars: char_count(text),
        words: words.len(),
        unique_words: unique.len(),
        punctuation: text.chars().filter(|&c| textprep::is_punctuation_mark(c)).count(),
        duplicate_words: words.len() - unique.len(),
        sentences: textprep::preprocess(text, table).sentences.len(),
    }
}

pub fn compute_stats(examples: &[LabeledExample]) -> Result<DatasetStats> {
    if examples.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    let table = ContractionTable::english();
    let counts: Vec<TextCounts> = {
        use rayon::prelude::*;
        examples.par_iter().map(|e| text_counts(&e.text, &table)).collect()
    };
    let column = |f: fn(&TextCounts) -> usize| ColumnStats::from_counts(counts.iter().map(f).collect());
    Ok(DatasetStats {
        chars: column(|c| c.chars),
        words: column(|c| c.words),
        unique_words: column(|c| c.unique_words),
        punctuation: column(|c| c.punctuation),
        duplicate_words: column(|c| c.duplicate_words),
        sentences: column(|c| c.sentences),
    })
}

impl DatasetStats {
    fn columns(&self) -> [(&'static str, &ColumnStats); 6] {
        [
            ("#chars", &self.chars),
            ("#words", &self.words),
            ("#unique words", &self.unique_words),
            ("#punctuation", &self.punctuation),
            ("#duplicate words", &self.duplicate_words),
            ("#sentences", &self.sentences),
        ]
    }
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.columns();
        write!(f, "{:<8}", "")?;
        for (name, _) in &cols {
            write!(f, " {name:>16}")?;
        }
        writeln!(f)?;
        type Getter = fn(&ColumnStats) -> f64;
        let rows: [(&str, Getter); 5] = [
            ("mean", |c| c.mean),
            ("std", |c| c.std),
            ("min", |c| c.min),
            ("median", |c| c.median),
            ("max", |c| c.max),
        ];
        for (label, get) in rows {
            write!(f, "{label:<8}")?;
            for (_, col) in &cols {
                write!(f, " {:>16.3}", get(col))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
