//! Single-layer LSTM over location embeddings with the same prediction head
//! and loss as the attention model. Serves as the sequential baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Graph, Tensor, Var};
use crate::data::PAD_LOCATION;
use crate::embeddings::EMBEDDING_INIT_STD;
use crate::error::{Error, Result};
use crate::eval::metrics::Scorer;
use crate::model::{nll_sum, prediction_head, ParamKind, Sample};
use crate::train::Trainable;

#[derive(Clone, Debug, PartialEq)]
pub struct LstmBaseline {
    /// `[(N+1)×d]`, row 0 is the pad row.
    pub locations: Tensor,
    /// Input weights `[d×4d]`, gate blocks in order input, forget, cell, output.
    pub w_input: Tensor,
    /// Recurrent weights `[d×4d]`.
    pub w_hidden: Tensor,
    /// `[4d]`
    pub bias: Tensor,
    /// `[(N+1)×d]`
    pub projection: Tensor,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundLstm {
    pub locations: Var,
    pub w_input: Var,
    pub w_hidden: Var,
    pub bias: Var,
    pub projection: Var,
}

impl LstmBaseline {
    pub fn init(num_locations: usize, d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("d must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = |rows: usize, cols: usize, std: f64| {
            let normal = Normal::new(0.0, std).expect("valid std");
            Tensor::new(vec![rows, cols], (0..rows * cols).map(|_| normal.sample(&mut rng)).collect())
        };
        let mut locations = sample(num_locations + 1, d, EMBEDDING_INIT_STD)?;
        locations.row_mut(0).fill(0.0);
        let scale = (1.0 / d as f64).sqrt();
        let w_input = sample(d, 4 * d, scale)?;
        let w_hidden = sample(d, 4 * d, scale)?;
        let projection = sample(num_locations + 1, d, scale)?;
        // forget gate starts open
        let bias = Tensor::vector((0..4 * d).map(|i| if (d..2 * d).contains(&i) { 1.0 } else { 0.0 }).collect());
        Ok(Self {
            locations,
            w_input,
            w_hidden,
            bias,
            projection,
        })
    }

    pub fn width(&self) -> usize {
        self.locations.cols()
    }

    pub fn bind(&self, g: &mut Graph) -> BoundLstm {
        BoundLstm {
            locations: g.param(&self.locations),
            w_input: g.param(&self.w_input),
            w_hidden: g.param(&self.w_hidden),
            bias: g.param(&self.bias),
            projection: g.param(&self.projection),
        }
    }

    /// Hidden states `[k×d]` for the location sequence `locs`.
    pub fn hidden_states(&self, g: &mut Graph, p: &BoundLstm, locs: &[usize]) -> Result<Var> {
        if locs.is_empty() {
            return Err(Error::EmptySequence);
        }
        let bound = self.locations.rows();
        if let Some(&bad) = locs.iter().find(|&&l| l >= bound) {
            return Err(Error::IndexOutOfRange {
                what: "location",
                index: bad,
                bound,
            });
        }
        let d = self.width();
        let x = g.gather_rows(p.locations, locs)?;
        // input contributions for all steps at once; only the recurrence is sequential
        let xw = g.matmul(x, p.w_input)?;
        let xw = g.add(xw, p.bias)?;
        let mut h = g.constant(&Tensor::zeros(&[1, d]));
        let mut c = g.constant(&Tensor::zeros(&[1, d]));
        let mut states = Vec::with_capacity(locs.len());
        for t in 0..locs.len() {
            let xt = g.slice_rows(xw, t, t + 1)?;
            let hw = g.matmul(h, p.w_hidden)?;
            let z = g.add(xt, hw)?;
            (h, c) = lstm_gates(g, z, c, d)?;
            states.push(h);
        }
        Ok(g.concat_rows(&states)?)
    }

    fn log_probs(&self, g: &mut Graph, p: &BoundLstm, sample: &Sample) -> Result<Var> {
        let locs: Vec<usize> = sample.recent.iter().map(|v| v.location).collect();
        let hs = self.hidden_states(g, p, &locs)?;
        let zero = g.constant(&Tensor::zeros(&[1, self.width()]));
        prediction_head(g, zero, hs, p.projection)
    }
}

/// One cell update from pre-activations `z` `[1×4d]` and cell state `c`.
pub fn lstm_gates(g: &mut Graph, z: Var, c: Var, d: usize) -> Result<(Var, Var)> {
    let zi = g.slice_cols(z, 0, d)?;
    let zf = g.slice_cols(z, d, 2 * d)?;
    let zg = g.slice_cols(z, 2 * d, 3 * d)?;
    let zo = g.slice_cols(z, 3 * d, 4 * d)?;
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let squashed = g.tanh(c_next);
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}

impl Trainable for LstmBaseline {
    fn visit_params(&self, f: &mut dyn FnMut(&str, ParamKind, &Tensor)) {
        f("location_embedding", ParamKind::LocationTable, &self.locations);
        f("w_input", ParamKind::Weight, &self.w_input);
        f("w_hidden", ParamKind::Weight, &self.w_hidden);
        f("bias", ParamKind::Bias, &self.bias);
        f("projection", ParamKind::Weight, &self.projection);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, ParamKind, &mut Tensor)) {
        f("location_embedding", ParamKind::LocationTable, &mut self.locations);
        f("w_input", ParamKind::Weight, &mut self.w_input);
        f("w_hidden", ParamKind::Weight, &mut self.w_hidden);
        f("bias", ParamKind::Bias, &mut self.bias);
        f("projection", ParamKind::Weight, &mut self.projection);
    }

    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, usize, Vec<Vec<f64>>)> {
        let mut g = Graph::new();
        let p = self.bind(&mut g);
        let lp = self.log_probs(&mut g, &p, sample)?;
        let (loss, n) = nll_sum(&mut g, lp, &sample.targets())?;
        g.backward(loss)?;
        let grads = [p.locations, p.w_input, p.w_hidden, p.bias, p.projection]
            .iter()
            .map(|&v| g.grad(v).map_or_else(|| vec![0.0; g.value(v).len()], <[f64]>::to_vec))
            .collect();
        Ok((g.scalar(loss), n, grads))
    }
}

impl Scorer for LstmBaseline {
    fn score(&self, sample: &Sample) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let p = self.bind(&mut g);
        let lp = self.log_probs(&mut g, &p, sample)?;
        let k = sample.recent.len();
        let width = self.locations.rows();
        let mut out: Vec<f64> = g.value(lp)[(k - 1) * width..k * width].iter().map(|x| x.exp()).collect();
        out[PAD_LOCATION] = 0.0;
        Ok(out)
    }
}
