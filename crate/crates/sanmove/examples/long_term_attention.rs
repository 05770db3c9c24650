//! Builds a user's long-term preference vector from their history and shows
//! how it depends on who is asking: the same history queried by two users
//! gives two different vectors once user embeddings have been trained.

use sanmove::autodiff::Graph;
use sanmove::data::Visit;
use sanmove::model::{training_samples, ModelConfig, SanMove, SpatioTemporal};
use sanmove::synthetic::ablation_dataset;
use sanmove::train::{TrainConfig, Trainer};

fn preference(model: &SanMove, user: usize, history: &[Visit]) -> sanmove::Result<Vec<f64>> {
    let mut g = Graph::new();
    let p = model.params.bind(&mut g);
    let time = g.constant(model.time_encoding().table());
    let h = model.long_term(&mut g, &p, time, user, history)?;
    Ok(g.value(h).to_vec())
}

fn main() -> sanmove::Result<()> {
    let data = ablation_dataset(3, 12, 3, 0.0, 7)?;
    let st = SpatioTemporal::from_dataset(&data);
    let mc = ModelConfig { d: 16, ..ModelConfig::default() };
    let history: Vec<Visit> = data.users[0].train.iter().flatten().copied().collect();
    println!("history of user 0: {} records", history.len());

    let config = TrainConfig { lr: 3e-3, epochs: 10, model: mc.clone(), ..TrainConfig::default() };
    let mut trainer = Trainer::new(SanMove::init(3, 12, mc.clone(), 0)?, config)?;
    for stage in ["initial", "after 10 epochs"] {
        let a = preference(&trainer.model, 0, &history)?;
        let b = preference(&trainer.model, 1, &history)?;
        let gap: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        let norm: f64 = a.iter().map(|x| x.abs()).sum();
        println!("{stage:>16}: |h(user 0)|_1 = {norm:.4}, |h(user 0) - h(user 1)|_1 = {gap:.2e}");
        trainer.fit(&training_samples(&data, &st, &mc), |_| {})?;
    }
    Ok(())
}
