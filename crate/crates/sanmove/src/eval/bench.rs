//! Per-epoch training time of the attention model against the LSTM baseline.

use std::io::Write;

use crate::error::{Error, Result};
use crate::eval::lstm::LstmBaseline;
use crate::eval::metrics::csv_error;
use crate::model::{ModelConfig, Sample, SanMove};
use crate::synthetic::bench_samples;
use crate::train::{TrainConfig, Trainable, Trainer};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub seq_len: usize,
    pub sessions: usize,
    /// Worker threads for both models; sessions per step is the same number.
    pub workers: usize,
    /// Timed epochs after the warm-up.
    pub epochs: usize,
    pub warmup: usize,
    pub d: usize,
    pub history_len: usize,
    pub num_users: usize,
    pub num_locations: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seq_len: 128,
            sessions: 2000,
            workers: 4,
            epochs: 5,
            warmup: 1,
            d: 32,
            history_len: 32,
            num_users: 50,
            num_locations: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub model: String,
    pub seq_len: usize,
    pub epochs: usize,
    pub median_s: f64,
    pub ratio_vs_lstm: f64,
    pub workers: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Wall time of each timed epoch, after `warmup` untimed ones.
pub fn time_epochs<M: Trainable>(
    trainer: &mut Trainer<M>,
    samples: &[Sample],
    warmup: usize,
    epochs: usize,
) -> Result<Vec<f64>> {
    for _ in 0..warmup {
        trainer.train_epoch(samples)?;
    }
    (0..epochs)
        .map(|_| trainer.train_epoch(samples).map(|r| r.wall_time_s))
        .collect()
}

impl BenchConfig {
    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.workers,
            workers: self.workers,
            seed: self.seed,
            model: ModelConfig {
                d: self.d,
                ..ModelConfig::default()
            },
            ..TrainConfig::default()
        }
    }

    pub fn samples(&self) -> Vec<Sample> {
        bench_samples(
            self.seq_len,
            self.sessions,
            self.history_len,
            self.num_users,
            self.num_locations,
            &self.train_config().model,
            self.seed,
        )
    }

    pub fn sanmove_trainer(&self) -> Result<Trainer<SanMove>> {
        let tc = self.train_config();
        let model = SanMove::init(self.num_users, self.num_locations, tc.model.clone(), self.seed)?;
        Trainer::new(model, tc)
    }

    pub fn lstm_trainer(&self) -> Result<Trainer<LstmBaseline>> {
        Trainer::new(LstmBaseline::init(self.num_locations, self.d, self.seed)?, self.train_config())
    }
}

/// Times both models on the same workload; the LSTM row comes first.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.epochs == 0 || cfg.sessions == 0 || cfg.seq_len < 2 {
        return Err(Error::Config("bench needs epochs >= 1, sessions >= 1 and seq_len >= 2".into()));
    }
    let samples = cfg.samples();
    let lstm = median(&time_epochs(&mut cfg.lstm_trainer()?, &samples, cfg.warmup, cfg.epochs)?);
    let attn = median(&time_epochs(&mut cfg.sanmove_trainer()?, &samples, cfg.warmup, cfg.epochs)?);
    let row = |model: &str, median_s: f64| BenchRow {
        model: model.into(),
        seq_len: cfg.seq_len,
        epochs: cfg.epochs,
        median_s,
        ratio_vs_lstm: median_s / lstm,
        workers: cfg.workers,
    };
    Ok(vec![row("lstm", lstm), row("sanmove", attn)])
}

/// Columns `model,seq_len,epochs,median_s,ratio_vs_lstm,workers`.
pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "seq_len", "epochs", "median_s", "ratio_vs_lstm", "workers"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.seq_len.to_string(),
            r.epochs.to_string(),
            format!("{:.6}", r.median_s),
            format!("{:.4}", r.ratio_vs_lstm),
            r.workers.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
