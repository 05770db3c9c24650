//! File-level operations behind the command-line tool.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::load_config;
use crate::data::{parse_checkins, preprocess, read_dataset, write_dataset, Dataset, InputFormat, PipelineRules, Preprocessed, StatsReport};
use crate::error::{Error, Result};
use crate::eval::metrics::{evaluate, write_metrics_csv, Metrics, MetricsRow, DEFAULT_KS};
use crate::eval::MarkovModel;
use crate::model::{evaluation_samples, training_samples, SanMove, SpatioTemporal};
use crate::stnova::StnovaMode;
use crate::train::{EpochReport, Trainer};

pub const DATASET_FILE: &str = "dataset.txt";
pub const STATS_FILE: &str = "stats.csv";
pub const REJECTS_FILE: &str = "rejects.txt";

pub fn preprocess_text(input: &str, rules: &PipelineRules) -> Result<Preprocessed> {
    let report = parse_checkins(input.as_bytes(), InputFormat::FoursquareTsv)?;
    Ok(preprocess(report, rules)?)
}

/// Parses and preprocesses `input`, writing the dataset, per-stage statistics
/// and rejected lines into `out_dir`.
pub fn preprocess_file(input: &Path, out_dir: &Path) -> Result<Preprocessed> {
    let reader = BufReader::new(File::open(input)?);
    let report = parse_checkins(reader, InputFormat::FoursquareTsv)?;
    let done = preprocess(report, &PipelineRules::default())?;
    fs::create_dir_all(out_dir)?;
    write_dataset(&done.dataset, BufWriter::new(File::create(out_dir.join(DATASET_FILE))?))?;
    fs::write(out_dir.join(STATS_FILE), done.stats.to_csv())?;
    fs::write(out_dir.join(REJECTS_FILE), done.rejects_text())?;
    Ok(done)
}

/// Accepts either a preprocessing output directory or a dataset file.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let file: PathBuf = if path.is_dir() { path.join(DATASET_FILE) } else { path.to_path_buf() };
    Ok(read_dataset(BufReader::new(File::open(file)?))?)
}

pub fn stats_file(input: &Path) -> Result<StatsReport> {
    let reader = BufReader::new(File::open(input)?);
    let report = parse_checkins(reader, InputFormat::FoursquareTsv)?;
    Ok(preprocess(report, &PipelineRules::default())?.stats)
}

/// Trains from scratch with the settings in `config_path`, saving the model
/// to `checkpoint` after every epoch.
pub fn train_dataset(
    data: &Dataset,
    config_path: &Path,
    mode: Option<StnovaMode>,
    checkpoint: &Path,
    mut on_epoch: impl FnMut(&EpochReport),
) -> Result<SanMove> {
    let mut config = load_config(config_path)?;
    if let Some(m) = mode {
        config.model.mode = m;
    }
    let st = SpatioTemporal::from_dataset(data);
    let samples = training_samples(data, &st, &config.model);
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let model = SanMove::init(
        data.vocab.num_users(),
        data.vocab.num_locations(),
        config.model.clone(),
        config.seed,
    )?;
    let mut trainer = Trainer::new(model, config)?;
    for _ in 0..trainer.config.epochs {
        let report = trainer.train_epoch(&samples)?;
        save_checkpoint(&trainer.model, checkpoint)?;
        on_epoch(&report);
    }
    if trainer.config.epochs == 0 {
        save_checkpoint(&trainer.model, checkpoint)?;
    }
    Ok(trainer.into_model())
}

/// Evaluation results for the trained model and the Markov baseline.
pub struct EvalOutcome {
    pub mode: StnovaMode,
    pub sanmove: Metrics,
    pub markov: Metrics,
}

pub fn evaluate_checkpoint(data: &Dataset, checkpoint: &Path, out_csv: &Path) -> Result<EvalOutcome> {
    let model = load_checkpoint(checkpoint)?;
    if model.params.num_users() != data.vocab.num_users() || model.params.num_locations() != data.vocab.num_locations() {
        return Err(Error::Config(format!(
            "checkpoint has {} users and {} locations, dataset has {} and {}",
            model.params.num_users(),
            model.params.num_locations(),
            data.vocab.num_users(),
            data.vocab.num_locations()
        )));
    }
    let st = SpatioTemporal::from_dataset(data);
    let queries = evaluation_samples(data, &st, &model.config);
    let sanmove = evaluate(&model, &queries, &DEFAULT_KS)?;
    let markov = evaluate(&MarkovModel::from_dataset(data), &queries, &DEFAULT_KS)?;
    let mode = model.config.mode;
    write_metrics_csv(
        BufWriter::new(File::create(out_csv)?),
        &[
            MetricsRow {
                model: "sanmove",
                mode: mode.as_str(),
                metrics: &sanmove,
            },
            MetricsRow {
                model: "markov",
                mode: "-",
                metrics: &markov,
            },
        ],
    )?;
    Ok(EvalOutcome { mode, sanmove, markov })
}
