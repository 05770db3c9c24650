//! Short-term preference module: spatio-temporal guided non-invasive
//! self-attention over the recent trajectory.
//!
//! Queries and keys are linear maps of the integrated embedding
//! `e_z = e_u + e_t + e_l + h_L`; values are a linear map of the pure
//! location embedding. Attention logits are scaled per (query, key) pair by
//! `Γ`, derived from slot co-occurrence similarity and inverse distance, and
//! masked causally so that every prefix is supervised in one pass.

use crate::autodiff::{Graph, Var};
use crate::data::SlotSimilarityTable;
use crate::error::{Error, Result};
use crate::long_term::{attention, dims, ffn, BoundBlock, GammaPlacement, KeyWeights};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Distances are clamped from below so `1/d` never exceeds 10.
pub const MIN_DISTANCE_KM: f64 = 0.1;

/// Which model variant the short-term module implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StnovaMode {
    /// Non-invasive values, spatio-temporal weights, long-term preference in `e_z`.
    #[default]
    Full,
    /// Values also come from the integrated embedding.
    Invasive,
    /// `h_L` is left out of the integrated embedding.
    NoPersonal,
    /// `Γ ≡ 1`: plain non-invasive attention.
    NoSt,
}

impl StnovaMode {
    pub const ALL: [StnovaMode; 4] = [Self::Full, Self::Invasive, Self::NoPersonal, Self::NoSt];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Invasive => "nova",
            Self::NoPersonal => "no-p",
            Self::NoSt => "no-st",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::Full => 0,
            Self::Invasive => 1,
            Self::NoPersonal => 2,
            Self::NoSt => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl std::str::FromStr for StnovaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?} (full|nova|no-p|no-st)")))
    }
}

impl std::fmt::Display for StnovaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the per-position short-term representation is read out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Readout {
    /// Output at the position itself.
    #[default]
    Last,
    /// Running mean of outputs up to and including the position.
    Mean,
}

/// Great-circle distance in kilometres between two `(lat, lon)` points in degrees.
pub fn haversine_km(p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (lat1, lon1) = (p1.0.to_radians(), p1.1.to_radians());
    let (lat2, lon2) = (p2.0.to_radians(), p2.1.to_radians());
    let a = ((lat2 - lat1) / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * ((lon2 - lon1) / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Sequence-level inputs of the spatio-temporal weights.
#[derive(Clone, Copy, Debug)]
pub struct StContext<'a> {
    pub slots: &'a [usize],
    /// `None` for locations without known coordinates (the pad index).
    pub coords: &'a [Option<(f64, f64)>],
    pub slot_table: &'a SlotSimilarityTable,
}

fn normalized_exp(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

/// `α_t` for query position `i` (0-based) over keys `0..=i`:
/// `exp(λ[slot_i, slot_k])` normalized over the keys.
pub fn temporal_weights(i: usize, ctx: &StContext<'_>) -> Vec<f64> {
    let c = ctx.slots[i];
    normalized_exp((0..=i).map(|k| ctx.slot_table.get(c, ctx.slots[k])))
}

/// Inverse-distance affinity `min(1/max(d, 0.1 km), 10)`; unknown
/// coordinates count as infinitely far (affinity 0).
pub fn inverse_distance(a: Option<(f64, f64)>, b: Option<(f64, f64)>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => (1.0 / haversine_km(a, b).max(MIN_DISTANCE_KM)).min(1.0 / MIN_DISTANCE_KM),
        _ => 0.0,
    }
}

/// `α_s` for query position `i` over keys `0..=i`.
pub fn spatial_weights(i: usize, ctx: &StContext<'_>) -> Vec<f64> {
    let c = ctx.coords[i];
    normalized_exp((0..=i).map(|k| inverse_distance(c, ctx.coords[k])))
}

/// `Γ = softmax(α_t + α_s)`.
pub fn gamma(alpha_t: &[f64], alpha_s: &[f64]) -> Vec<f64> {
    debug_assert_eq!(alpha_t.len(), alpha_s.len());
    normalized_exp(alpha_t.iter().zip(alpha_s).map(|(t, s)| t + s))
}

/// Full causal `Γ` matrix `[k×k]`; entries above the diagonal are 0.
/// Under [`StnovaMode::NoSt`] every causal entry is 1.
pub fn gamma_matrix(ctx: &StContext<'_>, mode: StnovaMode) -> Vec<f64> {
    let k = ctx.slots.len();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        let row = if mode == StnovaMode::NoSt {
            vec![1.0; i + 1]
        } else {
            gamma(&temporal_weights(i, ctx), &spatial_weights(i, ctx))
        };
        out[i * k..i * k + i + 1].copy_from_slice(&row);
    }
    out
}

/// Causal mask `[k×k]`: key `j` is hidden from query `i` when `j > i`.
pub fn causal_mask(k: usize) -> Vec<bool> {
    (0..k * k).map(|ix| ix % k > ix / k).collect()
}

/// `e_z = e_u + e_t + e_l (+ h_L)`; `h_L` is dropped under
/// [`StnovaMode::NoPersonal`]. Returns `(e_z, side)` where
/// `side = e_z − e_l`.
pub fn integrated_embedding(
    g: &mut Graph,
    users: Var,
    times: Var,
    locations: Var,
    h_l: Var,
    mode: StnovaMode,
) -> Result<(Var, Var)> {
    let mut side = g.add(users, times)?;
    if mode != StnovaMode::NoPersonal {
        side = g.add(side, h_l)?;
    }
    let ez = g.add(locations, side)?;
    Ok((ez, side))
}

#[derive(Clone, Copy, Debug)]
pub struct StnovaConfig {
    pub n_heads: usize,
    pub mode: StnovaMode,
    pub placement: GammaPlacement,
    pub readout: Readout,
}

#[derive(Clone, Debug)]
pub struct StnovaOutput {
    /// Per-position short-term representations `[k×d]`.
    pub positions: Var,
    /// `h_s`: the representation at the last position `[1×d]`.
    pub h_s: Var,
    /// Attention output of each layer before its feed-forward network.
    pub attended: Vec<Var>,
    /// Value matrix of each layer.
    pub values: Vec<Var>,
    /// Attention weights per layer, per head.
    pub weights: Vec<Vec<Var>>,
    /// Masked pre-softmax logits per layer, per head.
    pub logits: Vec<Vec<Var>>,
}

/// Short-term forward pass over a recent sequence of length `k`.
///
/// `gamma` is the `[k×k]` matrix from [`gamma_matrix`]. Deeper layers take
/// values from the previous layer's output and queries/keys from that output
/// plus the side information (or the output alone in invasive mode).
#[allow(clippy::too_many_arguments)]
pub fn stnova_forward(
    g: &mut Graph,
    blocks: &[BoundBlock],
    users: Var,
    times: Var,
    locations: Var,
    h_l: Var,
    gamma: &[f64],
    cfg: StnovaConfig,
) -> Result<StnovaOutput> {
    let (k, _) = dims(g, locations)?;
    if k == 0 {
        return Err(Error::EmptySequence);
    }
    if gamma.len() != k * k {
        return Err(Error::Config(format!("gamma has {} entries, expected {}", gamma.len(), k * k)));
    }
    let (ez, side) = integrated_embedding(g, users, times, locations, h_l, cfg.mode)?;
    let mask = causal_mask(k);
    let key_weights = KeyWeights {
        weights: gamma,
        placement: cfg.placement,
    };

    let invasive = cfg.mode == StnovaMode::Invasive;
    let (mut qk_in, mut v_in) = (ez, if invasive { ez } else { locations });
    let mut out = StnovaOutput {
        positions: locations,
        h_s: locations,
        attended: Vec::new(),
        values: Vec::new(),
        weights: Vec::new(),
        logits: Vec::new(),
    };
    let mut last = locations;
    for (layer, block) in blocks.iter().enumerate() {
        if layer > 0 {
            v_in = last;
            qk_in = if invasive { last } else { g.add(last, side)? };
        }
        let q = g.matmul(qk_in, block.wq)?;
        let kk = g.matmul(qk_in, block.wk)?;
        let v = g.matmul(v_in, block.wv)?;
        let att = attention(g, q, kk, v, Some(&mask), cfg.n_heads, Some(key_weights))?;
        last = ffn(g, att.output, block)?;
        out.attended.push(att.output);
        out.values.push(v);
        out.weights.push(att.weights);
        out.logits.push(att.logits);
    }
    out.positions = match cfg.readout {
        Readout::Last => last,
        Readout::Mean => {
            let mut avg = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..=i {
                    avg[i * k + j] = 1.0 / (i + 1) as f64;
                }
            }
            let a = g.constant_raw(vec![k, k], avg)?;
            g.matmul(a, last)?
        }
    };
    out.h_s = g.slice_rows(out.positions, k - 1, k)?;
    Ok(out)
}
