//! Prints the spatio-temporal weight matrix of one recent sequence and the
//! next-location distribution under each short-term attention variant.

use sanmove::model::{evaluation_samples, ModelConfig, Sample, SanMove, SpatioTemporal};
use sanmove::stnova::StnovaMode;
use sanmove::synthetic::ablation_dataset;

fn main() -> sanmove::Result<()> {
    let data = ablation_dataset(4, 10, 3, 0.0, 3)?;
    let st = SpatioTemporal::from_dataset(&data);
    let base = ModelConfig { d: 16, ..ModelConfig::default() };
    let (query, target) = evaluation_samples(&data, &st, &base).swap_remove(0);
    let k = query.recent.len();
    println!("recent locations {:?}, next is {target}", query.recent.iter().map(|v| v.location).collect::<Vec<_>>());
    println!("causal weights (row = query position):");
    for row in query.gamma.chunks(k) {
        println!("  {}", row.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>().join(" "));
    }
    for mode in StnovaMode::ALL {
        let config = ModelConfig { mode, ..base.clone() };
        // the weight matrix depends on the mode, so rebuild the sample
        let sample = Sample::new(query.user, &query.history, &query.recent, &st, &config);
        let model = SanMove::init(4, 10, config, 0)?;
        let p = model.score_next(&sample)?;
        let best = (1..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b]).then(b.cmp(&a))).unwrap_or(1);
        println!("{mode:>6}: top location {best} with p = {:.4}, p(target) = {:.4}", p[best], p[target]);
    }
    Ok(())
}
