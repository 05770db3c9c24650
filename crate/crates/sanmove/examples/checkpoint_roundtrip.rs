//! Saves a model, loads it back and confirms predictions are unchanged.

use sanmove::checkpoint::{encode, load_checkpoint, save_checkpoint};
use sanmove::model::{evaluation_samples, ModelConfig, SanMove, SpatioTemporal};
use sanmove::stnova::StnovaMode;
use sanmove::synthetic::cycle_dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = cycle_dataset(3, 6, 0.1, 1)?;
    let st = SpatioTemporal::from_dataset(&data);
    let config = ModelConfig { d: 8, n_layers: 2, n_heads: 2, mode: StnovaMode::NoPersonal, ..ModelConfig::default() };
    let model = SanMove::init(3, 6, config.clone(), 5)?;

    let dir = std::env::temp_dir().join(format!("sanmove-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("model.ckpt");
    save_checkpoint(&model, &path)?;
    let loaded = load_checkpoint(&path)?;
    println!("{} bytes written, mode {}", std::fs::metadata(&path)?.len(), loaded.config.mode);

    let queries = evaluation_samples(&data, &st, &config);
    let identical = queries
        .iter()
        .all(|(q, _)| model.score_next(q).ok() == loaded.score_next(q).ok());
    println!("predictions identical on {} queries: {identical}", queries.len());
    println!("re-encoding byte-identical: {}", encode(&loaded) == std::fs::read(&path)?);
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
