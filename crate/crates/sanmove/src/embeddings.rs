//! User/location embedding tables and the fixed sinusoidal slot encoding.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Graph, Tensor, Var};
use crate::data::NUM_SLOTS;
use crate::error::{Error, Result};

/// Standard deviation of the normal initializer for embedding tables.
pub const EMBEDDING_INIT_STD: f64 = 0.02;

/// Sinusoidal encoding of a weekly slot:
/// `e[2i] = sin(t / 10000^(2i/d))`, `e[2i+1] = cos(t / 10000^(2i/d))`.
pub fn time_encoding(slot: usize, d: usize) -> Result<Vec<f64>> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Config(format!("embedding width must be even and positive, got {d}")));
    }
    let t = slot as f64;
    let mut out = vec![0.0; d];
    for i in 0..d / 2 {
        let freq = 10000f64.powf(2.0 * i as f64 / d as f64);
        out[2 * i] = (t / freq).sin();
        out[2 * i + 1] = (t / freq).cos();
    }
    Ok(out)
}

/// Precomputed encodings for all 48 slots.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeEncoding {
    table: Tensor,
}

impl TimeEncoding {
    pub fn new(d: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(NUM_SLOTS * d);
        for slot in 0..NUM_SLOTS {
            data.extend(time_encoding(slot, d)?);
        }
        Ok(Self {
            table: Tensor::new(vec![NUM_SLOTS, d], data)?,
        })
    }

    pub fn table(&self) -> &Tensor {
        &self.table
    }

    pub fn row(&self, slot: usize) -> &[f64] {
        self.table.row(slot)
    }
}

/// Trainable `E_u` (`M×d`) and `E_l` (`(N+1)×d`, row 0 = pad).
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTables {
    pub users: Tensor,
    pub locations: Tensor,
}

impl EmbeddingTables {
    pub fn init<R: Rng>(num_users: usize, num_locations: usize, d: usize, rng: &mut R) -> Result<Self> {
        if d % 2 != 0 {
            return Err(Error::Config(format!("embedding width must be even, got {d}")));
        }
        let normal = Normal::new(0.0, EMBEDDING_INIT_STD).expect("valid std");
        let users = (0..num_users * d).map(|_| normal.sample(rng)).collect();
        let mut locations: Vec<f64> = (0..(num_locations + 1) * d).map(|_| normal.sample(rng)).collect();
        locations[..d].fill(0.0);
        Ok(Self {
            users: Tensor::new(vec![num_users, d], users)?,
            locations: Tensor::new(vec![num_locations + 1, d], locations)?,
        })
    }

    pub fn width(&self) -> usize {
        self.locations.cols()
    }
}

/// Per-position embeddings of one sequence, each `[k×d]`.
#[derive(Clone, Copy, Debug)]
pub struct SequenceEmbedding {
    /// `e_u`, repeated on every row.
    pub users: Var,
    pub locations: Var,
    pub times: Var,
}

/// Looks up user, location and slot embeddings for a sequence.
pub fn embed_session(
    g: &mut Graph,
    user_table: Var,
    location_table: Var,
    time_table: Var,
    user: usize,
    locations: &[usize],
    slots: &[usize],
) -> Result<SequenceEmbedding> {
    if locations.is_empty() {
        return Err(Error::EmptySequence);
    }
    if locations.len() != slots.len() {
        return Err(Error::Config("location and slot sequences differ in length".into()));
    }
    let users = g.gather_rows(user_table, &vec![user; locations.len()])?;
    let locations = g.gather_rows(location_table, locations)?;
    let times = g.gather_rows(time_table, slots)?;
    Ok(SequenceEmbedding {
        users,
        locations,
        times,
    })
}
