//! Long-term preference module: user-plus-time queries attend over the
//! location embeddings of a user's historical check-ins, followed by a
//! position-wise feed-forward network and average pooling.
//!
//! The generic [`attention`] and [`ffn`] building blocks also serve the
//! short-term module.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Parameters of one attention layer plus its feed-forward network.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionBlock {
    pub wq: Tensor,
    pub wk: Tensor,
    pub wv: Tensor,
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

/// Graph handles of an [`AttentionBlock`].
#[derive(Clone, Copy, Debug)]
pub struct BoundBlock {
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

impl AttentionBlock {
    /// Square maps drawn from `N(0, 1/d)`, biases zero.
    pub fn init<R: Rng>(d: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("valid std");
        let mut mat = || {
            Tensor::new(vec![d, d], (0..d * d).map(|_| normal.sample(rng)).collect()).expect("square")
        };
        Self {
            wq: mat(),
            wk: mat(),
            wv: mat(),
            w1: mat(),
            b1: Tensor::zeros(&[d]),
            w2: mat(),
            b2: Tensor::zeros(&[d]),
        }
    }

    pub fn bind(&self, g: &mut Graph) -> BoundBlock {
        BoundBlock {
            wq: g.param(&self.wq),
            wk: g.param(&self.wk),
            wv: g.param(&self.wv),
            w1: g.param(&self.w1),
            b1: g.param(&self.b1),
            w2: g.param(&self.w2),
            b2: g.param(&self.b2),
        }
    }

    /// `(name, tensor, is_bias)` in a fixed order.
    pub fn named(&self) -> [(&'static str, &Tensor, bool); 7] {
        [
            ("wq", &self.wq, false),
            ("wk", &self.wk, false),
            ("wv", &self.wv, false),
            ("w1", &self.w1, false),
            ("b1", &self.b1, true),
            ("w2", &self.w2, false),
            ("b2", &self.b2, true),
        ]
    }

    pub fn named_mut(&mut self) -> [(&'static str, &mut Tensor, bool); 7] {
        [
            ("wq", &mut self.wq, false),
            ("wk", &mut self.wk, false),
            ("wv", &mut self.wv, false),
            ("w1", &mut self.w1, false),
            ("b1", &mut self.b1, true),
            ("w2", &mut self.w2, false),
            ("b2", &mut self.b2, true),
        ]
    }
}

impl BoundBlock {
    pub fn vars(&self) -> [Var; 7] {
        [self.wq, self.wk, self.wv, self.w1, self.b1, self.w2, self.b2]
    }
}

/// How the spatio-temporal weights enter the attention logits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GammaPlacement {
    /// `softmax(Γ ⊙ QKᵀ / √d)`
    #[default]
    PreSoftmax,
    /// `softmax(QKᵀ / √d) ⊙ Γ`, renormalized per row, computed as
    /// `softmax(QKᵀ / √d + ln Γ)`.
    PostSoftmax,
}

/// Row-wise key weighting applied inside [`attention`].
#[derive(Clone, Copy, Debug)]
pub struct KeyWeights<'a> {
    /// Row-major `[a×b]`, one weight per (query, key) pair.
    pub weights: &'a [f64],
    pub placement: GammaPlacement,
}

#[derive(Clone, Debug)]
pub struct AttentionOutput {
    /// `[a×d]`
    pub output: Var,
    /// Per-head `[a×b]` row-stochastic weight matrices.
    pub weights: Vec<Var>,
    /// Per-head pre-softmax logits (after scaling and masking).
    pub logits: Vec<Var>,
}

/// Scaled dot-product attention, split over `n_heads` column slices.
///
/// `mask[i*b + j] == true` hides key `j` from query `i`. Each head uses the
/// scale `1/√(d/n_heads)`.
pub fn attention(
    g: &mut Graph,
    q: Var,
    k: Var,
    v: Var,
    mask: Option<&[bool]>,
    n_heads: usize,
    key_weights: Option<KeyWeights<'_>>,
) -> Result<AttentionOutput> {
    let (a, d) = dims(g, q)?;
    let (b, dk) = dims(g, k)?;
    let (bv, dv) = dims(g, v)?;
    if dk != d || dv != d || bv != b {
        return Err(Error::Config(format!(
            "attention shapes disagree: q [{a}x{d}], k [{b}x{dk}], v [{bv}x{dv}]"
        )));
    }
    if n_heads == 0 || d % n_heads != 0 {
        return Err(Error::Config(format!("width {d} not divisible by {n_heads} heads")));
    }
    if let Some(m) = mask {
        for row in 0..a {
            if m[row * b..(row + 1) * b].iter().all(|&x| x) {
                return Err(Error::FullyMaskedRow(row));
            }
        }
    }
    let kw = match key_weights {
        Some(kw) => {
            let data = match kw.placement {
                GammaPlacement::PreSoftmax => kw.weights.to_vec(),
                GammaPlacement::PostSoftmax => kw.weights.iter().map(|w| w.ln()).collect(),
            };
            Some((g.constant_raw(vec![a, b], data)?, kw.placement))
        }
        None => None,
    };

    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut heads = Vec::with_capacity(n_heads);
    let mut weights = Vec::with_capacity(n_heads);
    let mut all_logits = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let (qh, kh, vh) = if n_heads == 1 {
            (q, k, v)
        } else {
            (
                g.slice_cols(q, h * dh, (h + 1) * dh)?,
                g.slice_cols(k, h * dh, (h + 1) * dh)?,
                g.slice_cols(v, h * dh, (h + 1) * dh)?,
            )
        };
        let scores = g.matmul_t(qh, kh)?;
        let mut logits = g.scale(scores, scale);
        match kw {
            Some((w, GammaPlacement::PreSoftmax)) => logits = g.mul(logits, w)?,
            Some((w, GammaPlacement::PostSoftmax)) => logits = g.add(logits, w)?,
            None => {}
        }
        if let Some(m) = mask {
            logits = g.mask_fill(logits, m)?;
        }
        let w = g.softmax(logits, 1)?;
        heads.push(g.matmul(w, vh)?);
        weights.push(w);
        all_logits.push(logits);
    }
    let output = if n_heads == 1 { heads[0] } else { g.concat_cols(&heads)? };
    Ok(AttentionOutput {
        output,
        weights,
        logits: all_logits,
    })
}

/// `ReLU(Y W1 + b1) W2 + b2`, position-wise, without a residual path.
pub fn ffn(g: &mut Graph, y: Var, block: &BoundBlock) -> Result<Var> {
    let h = g.matmul(y, block.w1)?;
    let h = g.add(h, block.b1)?;
    let h = g.relu(h);
    let o = g.matmul(h, block.w2)?;
    Ok(g.add(o, block.b2)?)
}

/// `e_{u,t} = e_u + e_t` per position. `users` may be `[1×d]` or `[k×d]`.
pub fn build_queries(g: &mut Graph, users: Var, times: Var) -> Result<Var> {
    Ok(g.add(times, users)?)
}

/// Runs the stacked long-term layers and mean-pools the final outputs into
/// `h_L` (`[1×d]`). The first layer takes queries from `queries` and keys /
/// values from `locations`; deeper layers take all three from the previous
/// layer's output.
pub fn long_term_forward(
    g: &mut Graph,
    blocks: &[BoundBlock],
    n_heads: usize,
    queries: Var,
    locations: Var,
) -> Result<Var> {
    let (k, d) = dims(g, locations)?;
    if k == 0 {
        return Err(Error::EmptyHistory);
    }
    let (mut q_in, mut kv_in) = (queries, locations);
    for block in blocks {
        let q = g.matmul(q_in, block.wq)?;
        let kk = g.matmul(kv_in, block.wk)?;
        let v = g.matmul(kv_in, block.wv)?;
        let att = attention(g, q, kk, v, None, n_heads, None)?;
        let f = ffn(g, att.output, block)?;
        q_in = f;
        kv_in = f;
    }
    let pooled = g.mean(q_in, 0)?;
    Ok(g.reshape(pooled, vec![1, d])?)
}

pub(crate) fn dims(g: &Graph, v: Var) -> Result<(usize, usize)> {
    match g.shape(v) {
        [r, c] => Ok((*r, *c)),
        s => Err(Error::Config(format!("expected a matrix, got shape {s:?}"))),
    }
}
