//! Compares the attention model with the Markov chain and LSTM baselines on
//! data where the next step depends on both the user and the distance.
//!
//! `cargo run --release --example evaluate_baselines`

use sanmove::eval::metrics::{write_metrics_csv, MetricsRow};
use sanmove::eval::{evaluate, LstmBaseline, MarkovModel, DEFAULT_KS};
use sanmove::model::{evaluation_samples, training_samples, ModelConfig, SanMove, SpatioTemporal};
use sanmove::synthetic::ablation_dataset;
use sanmove::train::{TrainConfig, Trainer};

fn main() -> sanmove::Result<()> {
    let (users, locations, epochs) = (30, 20, 30);
    let data = ablation_dataset(users, locations, 3, 0.1, 0)?;
    let st = SpatioTemporal::from_dataset(&data);
    let mc = ModelConfig { d: 32, ..ModelConfig::default() };
    let samples = training_samples(&data, &st, &mc);
    let queries = evaluation_samples(&data, &st, &mc);
    let config = TrainConfig { lr: 3e-3, epochs, model: mc.clone(), ..TrainConfig::default() };

    let mut attn = Trainer::new(SanMove::init(users, locations, mc.clone(), 0)?, config.clone())?;
    attn.fit(&samples, |_| {})?;
    let mut lstm = Trainer::new(LstmBaseline::init(locations, 32, 0)?, config)?;
    lstm.fit(&samples, |_| {})?;

    let results = [
        ("sanmove", "full", evaluate(&attn.model, &queries, &DEFAULT_KS)?),
        ("lstm", "-", evaluate(&lstm.model, &queries, &DEFAULT_KS)?),
        ("markov", "-", evaluate(&MarkovModel::from_dataset(&data), &queries, &DEFAULT_KS)?),
    ];
    let rows: Vec<MetricsRow> = results
        .iter()
        .map(|(model, mode, metrics)| MetricsRow { model, mode, metrics })
        .collect();
    write_metrics_csv(std::io::stdout().lock(), &rows)
}
