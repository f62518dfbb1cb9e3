use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use humor_core::dataset::FilterConfig;
use humor_core::encoder::{DEFAULT_DIM, DEFAULT_MAX_SENTENCES, DEFAULT_MAX_SEQ_LEN};
use humor_core::eval::DEFAULT_NB_ALPHA;

#[derive(Debug, Parser)]
#[command(
    name = "humordet",
    version,
    about = "Humor detection over per-sentence embeddings",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error."
)]
pub struct Cli {
    /// Seed for sampling, splitting, initialization and batch order
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// key = value file supplying defaults for any flag; flags given on the
    /// command line win. Keys under a [subcommand] header apply only there.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Suppress progress and warnings on stderr
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the balanced text,humor dataset from a jokes and a news CSV
    BuildDataset(BuildDatasetArgs),
    /// Print column statistics of a text,humor dataset
    Stats(StatsArgs),
    /// Encode every dataset row into an embedding store
    Encode(EncodeArgs),
    /// Train the classifier on the train split of a store
    Train(TrainArgs),
    /// Evaluate on the test split, optionally next to a baseline
    Eval(EvalArgs),
    /// Score a single text
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Jokes source CSV
    #[arg(long, value_name = "PATH")]
    pub jokes: PathBuf,

    /// News headlines source CSV
    #[arg(long, value_name = "PATH")]
    pub news: PathBuf,

    /// Output dataset CSV
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,

    /// Text column in the jokes CSV
    #[arg(long, default_value = "text")]
    pub jokes_column: String,

    /// Text column in the news CSV
    #[arg(long, default_value = "text")]
    pub news_column: String,

    #[arg(long, default_value_t = FilterConfig::default().rows_per_class)]
    pub rows_per_class: usize,

    #[arg(long, default_value_t = FilterConfig::default().min_chars)]
    pub min_chars: usize,

    #[arg(long, default_value_t = FilterConfig::default().max_chars)]
    pub max_chars: usize,

    #[arg(long, default_value_t = FilterConfig::default().min_words)]
    pub min_words: usize,

    #[arg(long, default_value_t = FilterConfig::default().max_words)]
    pub max_words: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset CSV with text,humor columns
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeBackend {
    /// Hash-derived vectors, no model needed
    Mock,
    /// Copy records by row id from an existing store (see --source)
    File,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Dataset CSV with text,humor columns; row index becomes the example id
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    /// Output store
    #[arg(long, value_name = "PATH")]
    pub store: PathBuf,

    #[arg(long, value_enum, default_value_t = EncodeBackend::Mock)]
    pub backend: EncodeBackend,

    /// Existing store read by the file backend
    #[arg(long, value_name = "PATH", required_if_eq("backend", "file"))]
    pub source: Option<PathBuf>,

    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,

    /// Sentence vectors kept per record
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCES)]
    pub s_max: usize,

    #[arg(long, default_value_t = DEFAULT_MAX_SEQ_LEN)]
    pub max_seq_len: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Embedding store
    #[arg(long, value_name = "PATH")]
    pub store: PathBuf,

    /// Dataset CSV whose row order matches the store's example ids
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,

    /// Where to write the trained parameters
    #[arg(long, value_name = "PATH")]
    pub params_out: PathBuf,

    #[arg(long, default_value_t = 5)]
    pub epochs: usize,

    #[arg(long, default_value_t = 64)]
    pub batch: usize,

    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,

    /// Number of parallel sentence paths
    #[arg(long, default_value_t = DEFAULT_MAX_SENTENCES)]
    pub s_max: usize,

    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Baseline {
    /// Multinomial naive Bayes on whitespace tokens
    Nb,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("method").required(true).multiple(true).args(["params", "baseline"])))]
pub struct EvalArgs {
    /// Embedding store (required with --params)
    #[arg(long, value_name = "PATH")]
    pub store: Option<PathBuf>,

    /// Dataset CSV whose row order matches the store's example ids
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,

    /// Trained parameters to evaluate
    #[arg(long, value_name = "PATH", requires = "store")]
    pub params: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,

    /// Text source for the baseline [default: the --labels file]
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,

    /// Naive Bayes smoothing
    #[arg(long, default_value_t = DEFAULT_NB_ALPHA)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PredictBackend {
    Mock,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub text: String,

    /// Trained parameters
    #[arg(long, value_name = "PATH")]
    pub params: PathBuf,

    #[arg(long, value_enum, default_value_t = PredictBackend::Mock)]
    pub backend: PredictBackend,
}
