//! Optimizer, gradient clipping and the epoch loop.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ParamKind, Sample, SanMove};

/// Optimization settings plus the architecture they train.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub epochs: usize,
    /// Sessions per optimizer step.
    pub batch_size: usize,
    pub seed: u64,
    /// Threads computing per-session gradients.
    pub workers: usize,
    /// Epochs without a training-loss improvement before the rate is halved.
    pub lr_patience: usize,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-5,
            clip_norm: 5.0,
            epochs: 20,
            batch_size: 1,
            seed: 0,
            workers: 1,
            lr_patience: 3,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr >= 0.0 && self.lr.is_finite()),
            ("weight_decay", self.weight_decay >= 0.0 && self.weight_decay.is_finite()),
            ("clip_norm", self.clip_norm > 0.0),
            ("batch_size", self.batch_size > 0),
            ("workers", self.workers > 0),
            ("lr_patience", self.lr_patience > 0),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(Error::Config(format!("{name} is out of range")));
        }
        self.model.validate()
    }
}

/// Anything with named parameters and a per-sample loss gradient.
pub trait Trainable: Sync {
    fn visit_params(&self, f: &mut dyn FnMut(&str, ParamKind, &Tensor));
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut Tensor));
    /// Summed negative log-likelihood over the sample's supervised
    /// positions, their count, and the gradient of that sum per parameter
    /// in visit order.
    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, usize, Vec<Vec<f64>>)>;
}

impl Trainable for SanMove {
    fn visit_params(&self, f: &mut dyn FnMut(&str, ParamKind, &Tensor)) {
        self.params.visit(|n, k, t| f(n, k, t));
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut Tensor)) {
        self.params.visit_mut(|n, k, t| f(n, k, t));
    }

    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, usize, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let (loss, n) = self.loss_sum(&mut g, &p, sample)?;
        g.backward(loss)?;
        Ok((g.scalar(loss), n, p.gradients(&g)))
    }
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = grads.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
    norm
}

/// Adam with decoupled weight decay.
#[derive(Clone, Debug, Default)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            ..Self::default()
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update. Decay skips biases and the pad row of the location table.
    pub fn step<M: Trainable + ?Sized>(&mut self, model: &mut M, grads: &[Vec<f64>], lr: f64, weight_decay: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut idx = 0;
        model.visit_params_mut(&mut |_, kind, p| {
            let g = &grads[idx];
            if ms.len() <= idx {
                ms.push(vec![0.0; g.len()]);
                vs.push(vec![0.0; g.len()]);
            }
            let (m, v) = (&mut ms[idx], &mut vs[idx]);
            let width = if p.shape().len() == 2 { p.cols() } else { 0 };
            for (i, x) in p.data_mut().iter_mut().enumerate() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let update = (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                let decays = match kind {
                    ParamKind::Weight => true,
                    ParamKind::Bias => false,
                    ParamKind::LocationTable => i >= width,
                };
                let decay = if decays { weight_decay * *x } else { 0.0 };
                *x -= lr * (update + decay);
            }
            idx += 1;
        });
    }
}

/// Summary of one pass over the training samples.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean negative log-likelihood per supervised position, before each step.
    pub mean_loss: f64,
    pub wall_time_s: f64,
    pub examples: usize,
    pub examples_per_sec: f64,
    /// Learning rate in effect during the epoch.
    pub lr: f64,
    /// Steps dropped because of non-finite gradients.
    pub skipped_steps: usize,
}

pub struct Trainer<M> {
    pub model: M,
    pub config: TrainConfig,
    adam: Adam,
    pool: rayon::ThreadPool,
    lr: f64,
    epoch: usize,
    best_loss: f64,
    stale_epochs: usize,
}

impl<M: Trainable> Trainer<M> {
    pub fn new(model: M, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            model,
            lr: config.lr,
            config,
            adam: Adam::new(),
            pool,
            epoch: 0,
            best_loss: f64::INFINITY,
            stale_epochs: 0,
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    /// One shuffled pass. Per-session gradients are computed on the worker
    /// pool and summed in shuffle order, so results do not depend on the
    /// number of workers.
    pub fn train_epoch(&mut self, samples: &[Sample]) -> Result<EpochReport> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let start = Instant::now();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ (self.epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        order.shuffle(&mut rng);

        let (mut loss_total, mut count_total, mut skipped) = (0.0, 0usize, 0usize);
        for batch in order.chunks(self.config.batch_size) {
            let model = &self.model;
            let results: Vec<Result<(f64, usize, Vec<Vec<f64>>)>> = self
                .pool
                .install(|| batch.par_iter().map(|&i| model.loss_and_grads(&samples[i])).collect());

            let mut grads: Option<Vec<Vec<f64>>> = None;
            let (mut batch_loss, mut batch_count) = (0.0, 0usize);
            for r in results {
                let (loss, n, g) = match r {
                    Err(Error::NoTargets) => continue,
                    other => other?,
                };
                batch_loss += loss;
                batch_count += n;
                match &mut grads {
                    None => grads = Some(g),
                    Some(acc) => {
                        for (a, b) in acc.iter_mut().zip(&g) {
                            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        }
                    }
                }
            }
            let Some(mut grads) = grads else { continue };
            let inv = 1.0 / batch_count as f64;
            grads.iter_mut().flatten().for_each(|g| *g *= inv);
            let norm = clip_global_norm(&mut grads, self.config.clip_norm);
            if !norm.is_finite() || !batch_loss.is_finite() {
                log::warn!("skipping step with non-finite gradient (epoch {})", self.epoch);
                skipped += 1;
                continue;
            }
            loss_total += batch_loss;
            count_total += batch_count;
            self.adam
                .step(&mut self.model, &grads, self.lr, self.config.weight_decay);
        }
        if count_total == 0 && skipped == 0 {
            return Err(Error::NoTargets);
        }

        let wall = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        let mean_loss = if count_total > 0 { loss_total / count_total as f64 } else { f64::NAN };
        let report = EpochReport {
            epoch: self.epoch,
            mean_loss,
            wall_time_s: wall,
            examples: samples.len(),
            examples_per_sec: samples.len() as f64 / wall,
            lr: self.lr,
            skipped_steps: skipped,
        };
        self.end_epoch(mean_loss);
        Ok(report)
    }

    fn end_epoch(&mut self, loss: f64) {
        self.epoch += 1;
        if loss < self.best_loss {
            self.best_loss = loss;
            self.stale_epochs = 0;
        } else {
            self.stale_epochs += 1;
            if self.stale_epochs >= self.config.lr_patience {
                self.lr *= 0.5;
                self.stale_epochs = 0;
                log::info!("training loss plateaued; learning rate now {}", self.lr);
            }
        }
    }

    /// Runs `config.epochs` epochs, calling `on_epoch` after each.
    pub fn fit(&mut self, samples: &[Sample], mut on_epoch: impl FnMut(&EpochReport)) -> Result<Vec<EpochReport>> {
        let mut out = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let r = self.train_epoch(samples)?;
            on_epoch(&r);
            out.push(r);
        }
        Ok(out)
    }

    pub fn into_model(self) -> M {
        self.model
    }
}
