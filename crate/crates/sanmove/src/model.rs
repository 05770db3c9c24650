//! The full next-location model: embeddings, long-term module, short-term
//! module and the projection head.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Graph, Tensor, Var};
use crate::data::{Dataset, SlotSimilarityTable, Visit, PAD_LOCATION};
use crate::embeddings::{embed_session, EmbeddingTables, TimeEncoding};
use crate::error::{Error, Result};
use crate::long_term::{build_queries, long_term_forward, AttentionBlock, BoundBlock, GammaPlacement};
use crate::stnova::{gamma_matrix, stnova_forward, Readout, StContext, StnovaConfig, StnovaMode, StnovaOutput};

/// Architecture settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub d: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub mode: StnovaMode,
    pub readout: Readout,
    pub gamma_placement: GammaPlacement,
    /// Score locations with `E_l` instead of a separate projection matrix.
    pub tie_projection: bool,
    /// Historical records beyond this many (most recent kept) are dropped.
    pub max_history: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 64,
            n_layers: 1,
            n_heads: 1,
            mode: StnovaMode::Full,
            readout: Readout::Last,
            gamma_placement: GammaPlacement::PreSoftmax,
            tie_projection: false,
            max_history: 128,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d % 2 != 0 {
            return Err(Error::Config(format!("d must be even and positive, got {}", self.d)));
        }
        if self.n_layers == 0 {
            return Err(Error::Config("n_layers must be at least 1".into()));
        }
        if self.n_heads == 0 || self.d % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d = {} is not divisible by n_heads = {}",
                self.d, self.n_heads
            )));
        }
        if self.max_history == 0 {
            return Err(Error::Config("max_history must be at least 1".into()));
        }
        Ok(())
    }
}

/// Role of a trainable tensor, which decides weight-decay treatment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    /// Location table; row 0 is the pad row.
    LocationTable,
}

/// All trainable arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub embeddings: EmbeddingTables,
    pub long_term: Vec<AttentionBlock>,
    pub short_term: Vec<AttentionBlock>,
    /// `W_p`, `[(N+1)×d]`.
    pub projection: Tensor,
}

impl ModelParams {
    pub fn init<R: Rng>(num_users: usize, num_locations: usize, config: &ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let embeddings = EmbeddingTables::init(num_users, num_locations, d, rng)?;
        let long_term = (0..config.n_layers).map(|_| AttentionBlock::init(d, rng)).collect();
        let short_term = (0..config.n_layers).map(|_| AttentionBlock::init(d, rng)).collect();
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("valid std");
        let projection = Tensor::new(
            vec![num_locations + 1, d],
            (0..(num_locations + 1) * d).map(|_| normal.sample(rng)).collect(),
        )?;
        Ok(Self {
            embeddings,
            long_term,
            short_term,
            projection,
        })
    }

    /// Visits every tensor with its checkpoint name, in a fixed order.
    pub fn visit(&self, mut f: impl FnMut(&str, ParamKind, &Tensor)) {
        f("user_embedding", ParamKind::Weight, &self.embeddings.users);
        f("location_embedding", ParamKind::LocationTable, &self.embeddings.locations);
        for (prefix, blocks) in [("long_term", &self.long_term), ("short_term", &self.short_term)] {
            for (l, b) in blocks.iter().enumerate() {
                for (name, t, bias) in b.named() {
                    let kind = if bias { ParamKind::Bias } else { ParamKind::Weight };
                    f(&format!("{prefix}.{l}.{name}"), kind, t);
                }
            }
        }
        f("projection", ParamKind::Weight, &self.projection);
    }

    pub fn visit_mut(&mut self, mut f: impl FnMut(&str, ParamKind, &mut Tensor)) {
        f("user_embedding", ParamKind::Weight, &mut self.embeddings.users);
        f("location_embedding", ParamKind::LocationTable, &mut self.embeddings.locations);
        for (prefix, blocks) in [("long_term", &mut self.long_term), ("short_term", &mut self.short_term)] {
            for (l, b) in blocks.iter_mut().enumerate() {
                for (name, t, bias) in b.named_mut() {
                    let kind = if bias { ParamKind::Bias } else { ParamKind::Weight };
                    f(&format!("{prefix}.{l}.{name}"), kind, t);
                }
            }
        }
        f("projection", ParamKind::Weight, &mut self.projection);
    }

    pub fn num_users(&self) -> usize {
        self.embeddings.users.rows()
    }

    pub fn num_locations(&self) -> usize {
        self.embeddings.locations.rows() - 1
    }

    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        BoundParams {
            users: g.param(&self.embeddings.users),
            locations: g.param(&self.embeddings.locations),
            long_term: self.long_term.iter().map(|b| b.bind(g)).collect(),
            short_term: self.short_term.iter().map(|b| b.bind(g)).collect(),
            projection: g.param(&self.projection),
        }
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(|_, _, t| ok &= t.is_finite());
        ok
    }
}

/// Graph handles for [`ModelParams`], in the same order as `visit`.
#[derive(Clone, Debug)]
pub struct BoundParams {
    pub users: Var,
    pub locations: Var,
    pub long_term: Vec<BoundBlock>,
    pub short_term: Vec<BoundBlock>,
    pub projection: Var,
}

impl BoundParams {
    pub fn vars(&self) -> Vec<Var> {
        let mut v = vec![self.users, self.locations];
        for b in self.long_term.iter().chain(&self.short_term) {
            v.extend(b.vars());
        }
        v.push(self.projection);
        v
    }

    /// Inverse of [`BoundParams::vars`] for a model with `n_layers` layers per module.
    pub fn from_vars(vars: &[Var], n_layers: usize) -> Result<Self> {
        let expected = 3 + 14 * n_layers;
        if vars.len() != expected {
            return Err(Error::Config(format!("expected {expected} parameter handles, got {}", vars.len())));
        }
        let block = |i: usize| {
            let b = &vars[2 + 7 * i..9 + 7 * i];
            BoundBlock {
                wq: b[0],
                wk: b[1],
                wv: b[2],
                w1: b[3],
                b1: b[4],
                w2: b[5],
                b2: b[6],
            }
        };
        Ok(Self {
            users: vars[0],
            locations: vars[1],
            long_term: (0..n_layers).map(block).collect(),
            short_term: (n_layers..2 * n_layers).map(block).collect(),
            projection: vars[expected - 1],
        })
    }

    /// Gradients in `visit` order; unreached parameters get zeros.
    pub fn gradients(&self, g: &Graph) -> Vec<Vec<f64>> {
        self.vars()
            .into_iter()
            .map(|v| g.grad(v).map_or_else(|| vec![0.0; g.value(v).len()], <[f64]>::to_vec))
            .collect()
    }
}

/// Per-dataset inputs of the spatio-temporal weights.
#[derive(Clone, Debug)]
pub struct SpatioTemporal {
    pub slot_table: SlotSimilarityTable,
    pub coords: Vec<Option<(f64, f64)>>,
}

impl SpatioTemporal {
    pub fn from_dataset(data: &Dataset) -> Self {
        Self {
            slot_table: data.slot_table(),
            coords: data.coords(),
        }
    }
}

/// One model input: a user's history pool and a recent sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub user: usize,
    pub history: Vec<Visit>,
    pub recent: Vec<Visit>,
    /// Causal `Γ` for `recent`, `[k×k]`.
    pub gamma: Vec<f64>,
}

impl Sample {
    /// Builds a sample, truncating history to the most recent `config.max_history` records.
    pub fn new(
        user: usize,
        history: &[Visit],
        recent: &[Visit],
        st: &SpatioTemporal,
        config: &ModelConfig,
    ) -> Self {
        let start = history.len().saturating_sub(config.max_history);
        let slots: Vec<usize> = recent.iter().map(|v| v.slot).collect();
        let coords: Vec<Option<(f64, f64)>> = recent
            .iter()
            .map(|v| st.coords.get(v.location).copied().flatten())
            .collect();
        let ctx = StContext {
            slots: &slots,
            coords: &coords,
            slot_table: &st.slot_table,
        };
        Self {
            user,
            history: history[start..].to_vec(),
            recent: recent.to_vec(),
            gamma: gamma_matrix(&ctx, config.mode),
        }
    }

    /// Next-location targets for positions `0..k-1`.
    pub fn targets(&self) -> Vec<usize> {
        self.recent.iter().skip(1).map(|v| v.location).collect()
    }
}

/// Training samples: every training session after a user's first, with all
/// earlier sessions as history.
pub fn training_samples(data: &Dataset, st: &SpatioTemporal, config: &ModelConfig) -> Vec<Sample> {
    let mut out = Vec::new();
    for u in &data.users {
        let mut history: Vec<Visit> = Vec::new();
        for s in &u.train {
            if !history.is_empty() && s.len() >= 2 {
                out.push(Sample::new(u.user, &history, s, st, config));
            }
            history.extend_from_slice(s);
        }
    }
    out
}

/// Evaluation queries: for each test session, predict its final location
/// from the preceding records, with all earlier sessions as history.
pub fn evaluation_samples(data: &Dataset, st: &SpatioTemporal, config: &ModelConfig) -> Vec<(Sample, usize)> {
    let mut out = Vec::new();
    for u in &data.users {
        let mut history: Vec<Visit> = u.train.iter().flatten().copied().collect();
        for s in &u.test {
            if s.len() >= 2 && !history.is_empty() {
                let target = s[s.len() - 1].location;
                out.push((Sample::new(u.user, &history, &s[..s.len() - 1], st, config), target));
            }
            history.extend_from_slice(s);
        }
    }
    out
}

/// Graph nodes produced by one forward pass.
#[derive(Clone, Debug)]
pub struct Forward {
    pub h_l: Var,
    pub short: StnovaOutput,
    /// Log-probabilities over the `N+1` locations per recent position, pad masked.
    pub log_probs: Var,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SanMove {
    pub config: ModelConfig,
    pub params: ModelParams,
    time: TimeEncoding,
}

impl SanMove {
    pub fn new(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let d = params.embeddings.width();
        if d != config.d || params.long_term.len() != config.n_layers || params.short_term.len() != config.n_layers {
            return Err(Error::Config("parameters do not match the model configuration".into()));
        }
        Ok(Self {
            time: TimeEncoding::new(config.d)?,
            config,
            params,
        })
    }

    pub fn init(num_users: usize, num_locations: usize, config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(num_users, num_locations, &config, &mut rng)?;
        Self::new(config, params)
    }

    pub fn time_encoding(&self) -> &TimeEncoding {
        &self.time
    }

    fn check_indices(&self, sample: &Sample) -> Result<()> {
        let m = self.params.num_users();
        if sample.user >= m {
            return Err(Error::IndexOutOfRange {
                what: "user",
                index: sample.user,
                bound: m,
            });
        }
        let rows = self.params.num_locations() + 1;
        for v in sample.history.iter().chain(&sample.recent) {
            if v.location >= rows {
                return Err(Error::IndexOutOfRange {
                    what: "location",
                    index: v.location,
                    bound: rows,
                });
            }
        }
        Ok(())
    }

    /// Long-term module only: `h_L` for a user's history.
    pub fn long_term(&self, g: &mut Graph, p: &BoundParams, time: Var, user: usize, history: &[Visit]) -> Result<Var> {
        if history.is_empty() {
            return Err(Error::EmptyHistory);
        }
        let locs: Vec<usize> = history.iter().map(|v| v.location).collect();
        let slots: Vec<usize> = history.iter().map(|v| v.slot).collect();
        let e = embed_session(g, p.users, p.locations, time, user, &locs, &slots)?;
        let q = build_queries(g, e.users, e.times)?;
        long_term_forward(g, &p.long_term, self.config.n_heads, q, e.locations)
    }

    /// Full forward pass over one sample.
    pub fn forward(&self, g: &mut Graph, p: &BoundParams, sample: &Sample) -> Result<Forward> {
        if sample.recent.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_indices(sample)?;
        let time = g.constant(self.time.table());
        let h_l = self.long_term(g, p, time, sample.user, &sample.history)?;
        let locs: Vec<usize> = sample.recent.iter().map(|v| v.location).collect();
        let slots: Vec<usize> = sample.recent.iter().map(|v| v.slot).collect();
        let e = embed_session(g, p.users, p.locations, time, sample.user, &locs, &slots)?;
        let short = stnova_forward(
            g,
            &p.short_term,
            e.users,
            e.times,
            e.locations,
            h_l,
            &sample.gamma,
            StnovaConfig {
                n_heads: self.config.n_heads,
                mode: self.config.mode,
                placement: self.config.gamma_placement,
                readout: self.config.readout,
            },
        )?;
        let projection = if self.config.tie_projection { p.locations } else { p.projection };
        let log_probs = prediction_head(g, h_l, short.positions, projection)?;
        Ok(Forward { h_l, short, log_probs })
    }

    /// Sum of next-location negative log-likelihoods over all supervised
    /// positions with a real target, and the number of such positions.
    pub fn loss_sum(&self, g: &mut Graph, p: &BoundParams, sample: &Sample) -> Result<(Var, usize)> {
        let fwd = self.forward(g, p, sample)?;
        nll_sum(g, fwd.log_probs, &sample.targets())
    }

    /// Probabilities over all `N+1` locations for the position after the last
    /// recent record.
    pub fn score_next(&self, sample: &Sample) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let fwd = self.forward(&mut g, &p, sample)?;
        let k = sample.recent.len();
        let width = self.params.num_locations() + 1;
        Ok(g.value(fwd.log_probs)[(k - 1) * width..k * width]
            .iter()
            .map(|lp| lp.exp())
            .collect())
    }

    /// Per-position probability matrix `[k×(N+1)]`.
    pub fn predict_distribution(&self, sample: &Sample) -> Result<Tensor> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        let fwd = self.forward(&mut g, &p, sample)?;
        let lp = g.tensor(fwd.log_probs);
        let shape = lp.shape().to_vec();
        Ok(Tensor::new(shape, lp.into_data().into_iter().map(f64::exp).collect())?)
    }
}

/// `log softmax(W_p (h_L + h_s_i))` per position, with the pad column masked to `-inf`.
pub fn prediction_head(g: &mut Graph, h_l: Var, positions: Var, projection: Var) -> Result<Var> {
    let combined = g.add(positions, h_l)?;
    let logits = g.matmul_t(combined, projection)?;
    let shape = g.shape(logits).to_vec();
    let width = shape[1];
    let mask: Vec<bool> = (0..shape[0] * width).map(|i| i % width == PAD_LOCATION).collect();
    let masked = g.mask_fill(logits, &mask)?;
    Ok(g.log_softmax(masked, 1)?)
}

/// Recorded negative log-likelihood sum over rows of `log_probs` whose
/// target is a real location, and the number of such rows.
pub fn nll_sum(g: &mut Graph, log_probs: Var, targets: &[usize]) -> Result<(Var, usize)> {
    let at: Vec<(usize, usize)> = targets
        .iter()
        .enumerate()
        .filter(|(_, &t)| t != PAD_LOCATION)
        .map(|(i, &t)| (i, t))
        .collect();
    if at.is_empty() {
        return Err(Error::NoTargets);
    }
    let picked = g.pick(log_probs, &at)?;
    let total = g.sum(picked);
    Ok((g.scale(total, -1.0), at.len()))
}

/// Mean negative log-likelihood of `probs[i][targets[i]]` over rows with a
/// real target.
pub fn nll_loss(probs: &Tensor, targets: &[usize]) -> Result<f64> {
    let width = probs.cols();
    let mut total = 0.0;
    let mut n = 0usize;
    for (i, &t) in targets.iter().enumerate() {
        if t == PAD_LOCATION {
            continue;
        }
        if t >= width {
            return Err(Error::IndexOutOfRange {
                what: "target",
                index: t,
                bound: width,
            });
        }
        total -= probs.row(i)[t].ln();
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoTargets);
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check_many, TensorError};
    use crate::data::NUM_SLOTS;
    use rand::Rng;

    fn context(n: usize, rng: &mut ChaCha8Rng) -> SpatioTemporal {
        let obs: Vec<(usize, usize)> = (0..200)
            .map(|_| (rng.gen_range(0..NUM_SLOTS), rng.gen_range(1..=n)))
            .collect();
        let mut coords = vec![None];
        coords.extend((0..n).map(|_| Some((40.7 + rng.gen_range(-0.05..0.05), -74.0 + rng.gen_range(-0.05..0.05)))));
        SpatioTemporal {
            slot_table: SlotSimilarityTable::from_observations(obs),
            coords,
        }
    }

    fn visits(len: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<Visit> {
        (0..len)
            .map(|i| Visit {
                location: rng.gen_range(1..=n),
                timestamp: i as i64 * 600,
                slot: rng.gen_range(0..NUM_SLOTS),
            })
            .collect()
    }

    fn tiny(mode: StnovaMode, seed: u64) -> (SanMove, Sample) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = ModelConfig {
            d: 8,
            mode,
            ..ModelConfig::default()
        };
        let model = SanMove::init(2, 6, config.clone(), seed).unwrap();
        let st = context(6, &mut rng);
        let history = visits(5, 6, &mut rng);
        let recent = visits(4, 6, &mut rng);
        let sample = Sample::new(1, &history, &recent, &st, &config);
        (model, sample)
    }

    fn as_tensor_error(e: Error) -> TensorError {
        match e {
            Error::Tensor(t) => t,
            _ => TensorError::Empty { op: "model" },
        }
    }

    #[test]
    fn full_model_gradients_match_finite_differences() {
        for mode in [StnovaMode::Full, StnovaMode::Invasive, StnovaMode::NoPersonal, StnovaMode::NoSt] {
            let (model, sample) = tiny(mode, 3);
            let mut inputs = Vec::new();
            model.params.visit(|_, kind, t| {
                let mut t = t.clone();
                if kind == ParamKind::Bias {
                    // away from zero so the relu kinks are not hit
                    t.data_mut().iter_mut().enumerate().for_each(|(i, x)| *x = 0.01 * (i as f64 + 1.0));
                }
                inputs.push(t);
            });
            let err = grad_check_many(
                |g, vars| {
                    let p = BoundParams::from_vars(vars, 1).map_err(as_tensor_error)?;
                    let (loss, _) = model.loss_sum(g, &p, &sample).map_err(as_tensor_error)?;
                    Ok(loss)
                },
                &inputs,
                // smaller steps drown gradients of order 1e-7 in round-off
                1e-4,
            )
            .unwrap();
            assert!(err < 1e-4, "{mode}: {err}");
        }
    }

    #[test]
    fn prediction_rows_are_distributions_with_masked_pad() {
        let (model, sample) = tiny(StnovaMode::Full, 5);
        let p = model.predict_distribution(&sample).unwrap();
        assert_eq!(p.shape(), &[4, 7]);
        for i in 0..4 {
            let row = p.row(i);
            assert_eq!(row[0], 0.0);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(model.score_next(&sample).unwrap(), p.row(3).to_vec());
    }

    #[test]
    fn zero_projection_is_uniform_over_real_locations() {
        let (mut model, sample) = tiny(StnovaMode::Full, 6);
        model.params.projection = Tensor::zeros(&[7, 8]);
        let p = model.predict_distribution(&sample).unwrap();
        for i in 0..4 {
            for j in 1..7 {
                assert!((p.row(i)[j] - 1.0 / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn nll_examples() {
        let uniform = Tensor::from_rows(&[vec![0.0, 0.25, 0.25, 0.25, 0.25]]).unwrap();
        assert!((nll_loss(&uniform, &[2]).unwrap() - 4f64.ln()).abs() < 1e-15);
        let perfect = Tensor::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(nll_loss(&perfect, &[1]).unwrap(), 0.0);
        let mixed = Tensor::from_rows(&[vec![0.0, 0.5, 0.5], vec![0.0, 0.1, 0.9], vec![0.0, 0.3, 0.7]]).unwrap();
        let oracle = (-(0.5f64.ln()) - 0.9f64.ln()) / 2.0;
        assert!((nll_loss(&mixed, &[1, 2, 0]).unwrap() - oracle).abs() < 1e-15);
        assert!(matches!(nll_loss(&mixed, &[0, 0, 0]), Err(Error::NoTargets)));

        // recorded form agrees with the plain one
        let mut g = Graph::new();
        let lp = g.constant_raw(vec![3, 3], mixed.data().iter().map(|x| x.ln()).collect()).unwrap();
        let (sum, n) = nll_sum(&mut g, lp, &[1, 2, 0]).unwrap();
        assert_eq!(n, 2);
        assert!((g.scalar(sum) / 2.0 - oracle).abs() < 1e-15);
    }

    #[test]
    fn supervised_outputs_are_causal() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let (model, sample) = tiny(StnovaMode::Full, seed);
            let base = model.predict_distribution(&sample).unwrap();
            for j in 1..4 {
                let mut recent = sample.recent.clone();
                recent[j].location = recent[j].location % 6 + 1;
                recent[j].slot = rng.gen_range(0..NUM_SLOTS);
                let st = context(6, &mut ChaCha8Rng::seed_from_u64(seed));
                let changed = Sample::new(1, &sample.history, &recent, &st, &model.config);
                let out = model.predict_distribution(&changed).unwrap();
                for i in 0..j {
                    for (a, b) in base.row(i).iter().zip(out.row(i)) {
                        assert!((a - b).abs() < 1e-12, "seed {seed} j {j} i {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn truncation_keeps_most_recent_history() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = context(6, &mut rng);
        let history = visits(10, 6, &mut rng);
        let recent = visits(3, 6, &mut rng);
        let config = ModelConfig {
            max_history: 4,
            ..ModelConfig::default()
        };
        let s = Sample::new(0, &history, &recent, &st, &config);
        assert_eq!(s.history, history[6..].to_vec());
        assert_eq!(s.targets(), vec![recent[1].location, recent[2].location]);
    }

    #[test]
    fn out_of_range_indices_are_errors() {
        let (model, mut sample) = tiny(StnovaMode::Full, 2);
        sample.recent[0].location = 7;
        assert!(matches!(model.score_next(&sample), Err(Error::IndexOutOfRange { what: "location", .. })));
        sample.recent[0].location = 1;
        sample.user = 2;
        assert!(matches!(model.score_next(&sample), Err(Error::IndexOutOfRange { what: "user", .. })));
    }

    #[test]
    fn from_vars_inverts_vars() {
        let config = ModelConfig {
            d: 4,
            n_layers: 3,
            ..ModelConfig::default()
        };
        let model = SanMove::init(2, 3, config, 0).unwrap();
        let mut g = Graph::new();
        let p = model.params.bind(&mut g);
        let back = BoundParams::from_vars(&p.vars(), 3).unwrap();
        assert_eq!(back.vars(), p.vars());
        assert!(BoundParams::from_vars(&p.vars(), 2).is_err());
    }
}
