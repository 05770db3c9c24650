//! Line-oriented `key = value` training configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Keys not listed in
//! [`KEYS`] are rejected, as are repeated keys.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::long_term::GammaPlacement;
use crate::stnova::Readout;
use crate::train::TrainConfig;

pub const KEYS: &[&str] = &[
    "lr",
    "weight_decay",
    "clip_norm",
    "epochs",
    "batch_size",
    "seed",
    "workers",
    "lr_patience",
    "d",
    "n_layers",
    "n_heads",
    "mode",
    "readout",
    "gamma_placement",
    "tie_projection",
    "max_history",
];

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Config(format!("line {line}: invalid value {raw:?} for {key}")))
}

pub fn parse_config(text: &str) -> Result<TrainConfig> {
    let mut c = TrainConfig::default();
    let mut seen = BTreeSet::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, raw) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`")))?;
        let (key, raw) = (key.trim(), raw.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("line {line}: unknown key {key:?}")));
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config(format!("line {line}: duplicate key {key:?}")));
        }
        match key {
            "lr" => c.lr = value(line, key, raw)?,
            "weight_decay" => c.weight_decay = value(line, key, raw)?,
            "clip_norm" => c.clip_norm = value(line, key, raw)?,
            "epochs" => c.epochs = value(line, key, raw)?,
            "batch_size" => c.batch_size = value(line, key, raw)?,
            "seed" => c.seed = value(line, key, raw)?,
            "workers" => c.workers = value(line, key, raw)?,
            "lr_patience" => c.lr_patience = value(line, key, raw)?,
            "d" => c.model.d = value(line, key, raw)?,
            "n_layers" => c.model.n_layers = value(line, key, raw)?,
            "n_heads" => c.model.n_heads = value(line, key, raw)?,
            "mode" => c.model.mode = value(line, key, raw)?,
            "readout" => {
                c.model.readout = match raw {
                    "last" => Readout::Last,
                    "mean" => Readout::Mean,
                    _ => return Err(Error::Config(format!("line {line}: readout must be last or mean"))),
                }
            }
            "gamma_placement" => {
                c.model.gamma_placement = match raw {
                    "pre" => GammaPlacement::PreSoftmax,
                    "post" => GammaPlacement::PostSoftmax,
                    _ => return Err(Error::Config(format!("line {line}: gamma_placement must be pre or post"))),
                }
            }
            "tie_projection" => c.model.tie_projection = value(line, key, raw)?,
            "max_history" => c.model.max_history = value(line, key, raw)?,
            _ => unreachable!("key list and match arms agree"),
        }
    }
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<TrainConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
