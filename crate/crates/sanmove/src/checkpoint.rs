//! Binary checkpoint format.
//!
//! Magic `SANMOVE1`, then for each tensor: name length (u64 LE), name bytes
//! (UTF-8), rank (u64 LE), extents (u64 LE each), payload (f64 LE). Tensors
//! appear in [`ModelParams::visit`] order, preceded by a `model_config`
//! vector that records the architecture settings not recoverable from
//! shapes.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::autodiff::Tensor;
use crate::long_term::{AttentionBlock, GammaPlacement};
use crate::model::{ModelConfig, ModelParams, SanMove};
use crate::embeddings::EmbeddingTables;
use crate::stnova::{Readout, StnovaMode};

pub const MAGIC: &[u8; 8] = b"SANMOVE1";
const CONFIG_TENSOR: &str = "model_config";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("unknown tensor {0:?}")]
    UnknownTensor(String),
    #[error("missing tensor {0:?}")]
    MissingTensor(String),
    #[error("tensor {name:?} has shape {shape:?}, expected {expected:?}")]
    BadShape {
        name: String,
        shape: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("invalid checkpoint: {0}")]
    Invalid(String),
}

fn config_tensor(c: &ModelConfig) -> Tensor {
    Tensor::vector(vec![
        c.d as f64,
        c.n_layers as f64,
        c.n_heads as f64,
        f64::from(c.mode.code()),
        match c.readout {
            Readout::Last => 0.0,
            Readout::Mean => 1.0,
        },
        match c.gamma_placement {
            GammaPlacement::PreSoftmax => 0.0,
            GammaPlacement::PostSoftmax => 1.0,
        },
        if c.tie_projection { 1.0 } else { 0.0 },
        c.max_history as f64,
    ])
}

fn config_from_tensor(t: &Tensor) -> Result<ModelConfig, CheckpointError> {
    let v = t.data();
    if v.len() != 8 || v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
        return Err(CheckpointError::Invalid("malformed model_config".into()));
    }
    let invalid = |what: &str| CheckpointError::Invalid(format!("bad {what} code"));
    Ok(ModelConfig {
        d: v[0] as usize,
        n_layers: v[1] as usize,
        n_heads: v[2] as usize,
        mode: StnovaMode::from_code(v[3] as u8).ok_or_else(|| invalid("mode"))?,
        readout: match v[4] as u8 {
            0 => Readout::Last,
            1 => Readout::Mean,
            _ => return Err(invalid("readout")),
        },
        gamma_placement: match v[5] as u8 {
            0 => GammaPlacement::PreSoftmax,
            1 => GammaPlacement::PostSoftmax,
            _ => return Err(invalid("placement")),
        },
        tie_projection: v[6] != 0.0,
        max_history: v[7] as usize,
    })
}

fn write_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    out.extend_from_slice(&(name.len() as u64).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.extend_from_slice(&(t.shape().len() as u64).to_le_bytes());
    for &e in t.shape() {
        out.extend_from_slice(&(e as u64).to_le_bytes());
    }
    for &x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode(model: &SanMove) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    write_tensor(&mut out, CONFIG_TENSOR, &config_tensor(&model.config));
    model.params.visit(|name, _, t| write_tensor(&mut out, name, t));
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CheckpointError::Truncated(self.bytes.len())),
        }
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize, CheckpointError> {
        usize::try_from(self.u64()?).map_err(|_| CheckpointError::Invalid("extent overflows usize".into()))
    }
}

fn read_tensors(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, CheckpointError> {
    if bytes.len() < MAGIC.len() {
        return Err(if MAGIC.starts_with(bytes) {
            CheckpointError::Truncated(bytes.len())
        } else {
            CheckpointError::BadMagic
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if bytes.len() == MAGIC.len() {
        return Err(CheckpointError::Truncated(bytes.len()));
    }
    let mut r = Reader { bytes, pos: 8 };
    let mut out = Vec::new();
    while r.pos < bytes.len() {
        let name_len = r.usize()?;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| CheckpointError::Invalid("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.usize()?;
        if rank > 8 {
            return Err(CheckpointError::Invalid(format!("rank {rank} of {name:?}")));
        }
        let shape = (0..rank).map(|_| r.usize()).collect::<Result<Vec<_>, _>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| CheckpointError::Invalid(format!("shape of {name:?} overflows")))?;
        let payload = r.take(n.checked_mul(8).ok_or(CheckpointError::Truncated(bytes.len()))?)?;
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
        out.push((name, t));
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<SanMove, CheckpointError> {
    let mut tensors: BTreeMap<String, Tensor> = BTreeMap::new();
    for (name, t) in read_tensors(bytes)? {
        if tensors.insert(name.clone(), t).is_some() {
            return Err(CheckpointError::Invalid(format!("duplicate tensor {name:?}")));
        }
    }
    let config = config_from_tensor(
        &tensors
            .remove(CONFIG_TENSOR)
            .ok_or_else(|| CheckpointError::MissingTensor(CONFIG_TENSOR.into()))?,
    )?;
    let users = tensors
        .get("user_embedding")
        .ok_or_else(|| CheckpointError::MissingTensor("user_embedding".into()))?;
    let locations = tensors
        .get("location_embedding")
        .ok_or_else(|| CheckpointError::MissingTensor("location_embedding".into()))?;
    if users.shape().len() != 2 || locations.shape().len() != 2 || locations.rows() == 0 {
        return Err(CheckpointError::Invalid("embedding tables must be matrices".into()));
    }
    let (m, n, d) = (users.rows(), locations.rows() - 1, config.d);

    // build a skeleton with the expected shapes, then fill it by name
    let d_sq = Tensor::zeros(&[d, d]);
    let block = AttentionBlock {
        wq: d_sq.clone(),
        wk: d_sq.clone(),
        wv: d_sq.clone(),
        w1: d_sq.clone(),
        b1: Tensor::zeros(&[d]),
        w2: d_sq,
        b2: Tensor::zeros(&[d]),
    };
    let mut params = ModelParams {
        embeddings: EmbeddingTables {
            users: Tensor::zeros(&[m, d]),
            locations: Tensor::zeros(&[n + 1, d]),
        },
        long_term: vec![block.clone(); config.n_layers],
        short_term: vec![block; config.n_layers],
        projection: Tensor::zeros(&[n + 1, d]),
    };
    let mut failure = None;
    params.visit_mut(|name, _, slot| {
        if failure.is_some() {
            return;
        }
        match tensors.remove(name) {
            None => failure = Some(CheckpointError::MissingTensor(name.to_string())),
            Some(t) if t.shape() != slot.shape() => {
                failure = Some(CheckpointError::BadShape {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    expected: slot.shape().to_vec(),
                })
            }
            Some(t) => *slot = t,
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if let Some(name) = tensors.into_keys().next() {
        return Err(CheckpointError::UnknownTensor(name));
    }
    SanMove::new(config, params).map_err(|e| CheckpointError::Invalid(e.to_string()))
}

pub fn save_checkpoint(model: &SanMove, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    std::fs::write(path, encode(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SanMove, CheckpointError> {
    decode(&std::fs::read(path)?)
}
