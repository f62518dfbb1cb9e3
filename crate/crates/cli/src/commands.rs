use std::path::Path;

use humor_core::dataset::{self, FilterConfig, LabeledExample, SourceFile};
use humor_core::encoder::{encode_record, EmbeddingRecord, EncoderConfig, MockEncoder};
use humor_core::eval::{self, EvalMetrics};
use humor_core::model::{self, ModelConfig, TrainConfig};
use humor_core::store::{store_write, EmbeddingStore};
use humor_core::textprep::{preprocess, ContractionTable};
use serde::Serialize;

use crate::args::{
    Baseline, BuildDatasetArgs, EncodeArgs, EncodeBackend, EvalArgs, OutputFormat, PredictArgs, StatsArgs, TrainArgs,
};
use crate::error::{CliResult, Failure};

pub struct Globals {
    pub seed: u64,
    pub quiet: bool,
}

impl Globals {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn require_input(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::data(format!("{what} not found: {}", path.display())))
    }
}

fn require_output(path: &Path, what: &str) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Failure::data(format!(
            "directory for {what} does not exist: {}",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

type LabeledIds = Vec<(u64, bool)>;

/// Row ids of the dataset, split the same way by `train` and `eval`.
fn split_ids(rows: &[LabeledExample], fraction: f64, seed: u64) -> CliResult<(LabeledIds, LabeledIds)> {
    let ids: Vec<(u64, bool)> = rows.iter().enumerate().map(|(i, r)| (i as u64, r.label)).collect();
    Ok(dataset::split(ids, fraction, seed)?)
}

fn fetch(store: &EmbeddingStore, ids: &[(u64, bool)]) -> CliResult<(Vec<EmbeddingRecord>, Vec<bool>)> {
    let mut records = Vec::with_capacity(ids.len());
    let mut labels = Vec::with_capacity(ids.len());
    for &(id, label) in ids {
        records.push(store.get(id)?);
        labels.push(label);
    }
    Ok((records, labels))
}

pub fn build_dataset(args: &BuildDatasetArgs, g: &Globals) -> CliResult<()> {
    require_input(&args.jokes, "jokes file")?;
    require_input(&args.news, "news file")?;
    require_output(&args.out, "dataset")?;
    let cfg = FilterConfig {
        min_chars: args.min_chars,
        max_chars: args.max_chars,
        min_words: args.min_words,
        max_words: args.max_words,
        rows_per_class: args.rows_per_class,
        seed: g.seed,
    };
    cfg.validate()?;
    let examples = dataset::build(
        &SourceFile::new(&args.jokes, &args.jokes_column),
        &SourceFile::new(&args.news, &args.news_column),
        &cfg,
    )?;
    dataset::write_dataset(&args.out, &examples)?;
    g.note(format!("wrote {} rows to {}", examples.len(), args.out.display()));
    Ok(())
}

pub fn stats(args: &StatsArgs, _g: &Globals) -> CliResult<()> {
    require_input(&args.data, "dataset")?;
    let rows = dataset::read_dataset(&args.data)?;
    let stats = dataset::compute_stats(&rows)?;
    match args.format {
        OutputFormat::Table => print!("{stats}"),
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(&stats).map_err(|e| Failure::internal(e.to_string()))?;
            println!("{json}");
        }
    }
    Ok(())
}

pub fn encode(args: &EncodeArgs, g: &Globals) -> CliResult<()> {
    require_input(&args.data, "dataset")?;
    require_output(&args.store, "store")?;
    let cfg = EncoderConfig {
        dim: args.dim,
        max_seq_len: args.max_seq_len,
        max_sentences: args.s_max,
    };
    cfg.validate()?;
    let rows = dataset::read_dataset(&args.data)?;
    let records = match args.backend {
        EncodeBackend::Mock => {
            let table = ContractionTable::english();
            let encoder = MockEncoder::new(args.dim);
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    encode_record(&encoder, i as u64, &preprocess(&row.text, &table), &cfg)
                        .map_err(|e| Failure::from(e).context(format!("row {i}")))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
        EncodeBackend::File => {
            let source = args.source.as_deref().expect("clap requires --source");
            require_input(source, "source store")?;
            let store = EmbeddingStore::open_expecting(source, args.dim)?;
            (0..rows.len() as u64)
                .map(|id| {
                    let mut rec = store.get(id)?;
                    rec.sentence_vectors.truncate(args.s_max);
                    Ok(rec)
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    store_write(&args.store, &records, args.dim)?;
    g.note(format!("wrote {} records to {}", records.len(), args.store.display()));
    Ok(())
}

pub fn train(args: &TrainArgs, g: &Globals) -> CliResult<()> {
    require_input(&args.store, "store")?;
    require_input(&args.labels, "labels file")?;
    require_output(&args.params_out, "params")?;
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        learning_rate: args.lr,
        seed: g.seed,
        ..Default::default()
    };
    train_cfg.validate()?;
    let store = EmbeddingStore::open(&args.store)?;
    let model_cfg = ModelConfig {
        dim: store.dim(),
        s_max: args.s_max,
        seed: g.seed,
        ..Default::default()
    };
    model_cfg.validate()?;

    let rows = dataset::read_dataset(&args.labels)?;
    let (train_ids, _) = split_ids(&rows, args.train_fraction, g.seed)?;
    let (records, labels) = fetch(&store, &train_ids)?;
    g.note(format!(
        "training on {} of {} rows, {} parameters",
        records.len(),
        rows.len(),
        model_cfg.param_count()
    ));
    let epochs = train_cfg.epochs;
    let outcome = model::train_with_progress(
        model::init(&model_cfg)?,
        &records,
        &labels,
        &model_cfg,
        &train_cfg,
        |epoch, loss| g.note(format!("epoch {}/{epochs} loss {loss:.6}", epoch + 1)),
    )?;
    model::save_params(&args.params_out, &outcome.params, &model_cfg)?;
    g.note(format!("wrote params to {}", args.params_out.display()));
    Ok(())
}

struct Row {
    method: &'static str,
    configuration: String,
    metrics: EvalMetrics,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    method: &'a str,
    #[serde(flatten)]
    metrics: &'a EvalMetrics,
}

pub fn eval(args: &EvalArgs, g: &Globals) -> CliResult<()> {
    require_input(&args.labels, "labels file")?;
    if let Some(store) = &args.store {
        require_input(store, "store")?;
    }
    if let Some(params) = &args.params {
        require_input(params, "params")?;
    }
    let data_path = args.data.as_deref().unwrap_or(&args.labels);
    if args.baseline.is_some() {
        require_input(data_path, "baseline data")?;
    }

    let rows = dataset::read_dataset(&args.labels)?;
    let (train_ids, test_ids) = split_ids(&rows, args.train_fraction, g.seed)?;
    let mut results = Vec::new();

    if let Some(params_path) = &args.params {
        let (params, cfg) = model::load_params(params_path)?;
        let store_path = args.store.as_deref().expect("clap requires --store with --params");
        let store = EmbeddingStore::open_expecting(store_path, cfg.dim)?;
        let (records, labels) = fetch(&store, &test_ids)?;
        let preds = model::predict_batch(&params, &records, &cfg)?;
        let predicted: Vec<bool> = preds.iter().map(|p| p.label).collect();
        results.push(Row {
            method: "Parallel paths",
            configuration: format!("s_max={}, dim={}", cfg.s_max, cfg.dim),
            metrics: eval::compute_metrics(&predicted, &labels)?,
        });
    }

    if let Some(Baseline::Nb) = args.baseline {
        let texts = if data_path == args.labels {
            rows.clone()
        } else {
            dataset::read_dataset(data_path)?
        };
        if texts.len() != rows.len() {
            return Err(Failure::data(format!(
                "{} has {} rows but {} has {}",
                data_path.display(),
                texts.len(),
                args.labels.display(),
                rows.len()
            )));
        }
        let fit_texts: Vec<&str> = train_ids
            .iter()
            .map(|&(i, _)| texts[i as usize].text.as_str())
            .collect();
        let fit_labels: Vec<bool> = train_ids.iter().map(|&(_, y)| y).collect();
        let nb = eval::nb_fit(&fit_texts, &fit_labels, args.alpha)?;
        let test: Vec<(&str, bool)> = test_ids
            .iter()
            .map(|&(i, y)| (texts[i as usize].text.as_str(), y))
            .collect();
        let metrics = eval::evaluate_model(|t: &&str| Ok::<_, eval::EvalError>(eval::nb_predict(&nb, t)), &test)?;
        results.push(Row {
            method: "Multinomial NB",
            configuration: format!("alpha={}", args.alpha),
            metrics,
        });
    }

    for r in &results {
        if r.metrics.precision_undefined {
            g.note(format!(
                "warning: {} made no positive predictions; precision reported as 0",
                r.method
            ));
        }
        if r.metrics.recall_undefined {
            g.note(format!(
                "warning: test split of {} has no positive labels; recall reported as 0",
                r.method
            ));
        }
    }
    match args.format {
        OutputFormat::Table => {
            println!("{}", EvalMetrics::table_header());
            for r in &results {
                println!("{}", r.metrics.table_row(r.method, &r.configuration));
            }
        }
        OutputFormat::Json => {
            for r in &results {
                let row = JsonRow {
                    method: r.method,
                    metrics: &r.metrics,
                };
                let json = serde_json::to_string(&row).map_err(|e| Failure::internal(e.to_string()))?;
                println!("{json}");
            }
        }
    }
    Ok(())
}

pub fn predict(args: &PredictArgs, _g: &Globals) -> CliResult<()> {
    require_input(&args.params, "params")?;
    let (params, cfg) = model::load_params(&args.params)?;
    let table = ContractionTable::english();
    let clean = preprocess(&args.text, &table);
    let enc_cfg = EncoderConfig {
        dim: cfg.dim,
        max_sentences: cfg.s_max,
        ..Default::default()
    };
    let record = encode_record(&MockEncoder::new(cfg.dim), 0, &clean, &enc_cfg)?;
    let pred = model::predict(&params, &record, &cfg)?;
    println!("{:.6}\t{}", pred.probability, pred.label);
    Ok(())
}
