//! Trains the model on users walking a ring of locations with a little
//! noise and reports recall after each few epochs.
//!
//! `cargo run --release --example train_cycle`

use sanmove::eval::{evaluate, DEFAULT_KS};
use sanmove::model::{evaluation_samples, training_samples, ModelConfig, SanMove, SpatioTemporal};
use sanmove::synthetic::cycle_dataset;
use sanmove::train::{TrainConfig, Trainer};

fn main() -> sanmove::Result<()> {
    env_logger::init();
    let data = cycle_dataset(20, 10, 0.05, 0)?;
    let st = SpatioTemporal::from_dataset(&data);
    let model_config = ModelConfig { d: 32, ..ModelConfig::default() };
    let samples = training_samples(&data, &st, &model_config);
    let queries = evaluation_samples(&data, &st, &model_config);
    println!("{} training sessions, {} test queries", samples.len(), queries.len());

    let config = TrainConfig { lr: 1e-3, epochs: 50, model: model_config.clone(), ..TrainConfig::default() };
    let mut trainer = Trainer::new(SanMove::init(20, 10, model_config, 0)?, config)?;
    for epoch in 1..=50 {
        let report = trainer.train_epoch(&samples)?;
        if epoch % 10 == 0 {
            let m = evaluate(&trainer.model, &queries, &DEFAULT_KS)?;
            println!(
                "epoch {epoch:>2}  loss {:.4}  recall@1 {:.3}  recall@5 {:.3}  ndcg@10 {:.3}",
                report.mean_loss,
                m.recall(1),
                m.recall(5),
                m.ndcg(10)
            );
        }
    }
    Ok(())
}
