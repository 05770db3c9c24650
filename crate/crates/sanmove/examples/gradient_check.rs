//! Checks reverse-mode gradients against central differences, first for a
//! small composite expression, then for the whole model loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sanmove::autodiff::{grad_check, grad_check_many, Tensor, TensorError};
use sanmove::data::{SlotSimilarityTable, Visit};
use sanmove::model::{BoundParams, ModelConfig, Sample, SanMove, SpatioTemporal};

fn main() -> sanmove::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor::new(vec![3, 4], (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect())?;
    let err = grad_check(
        |g, x| {
            let s = g.softmax(x, 1)?;
            let t = g.tanh(x);
            let p = g.mul(s, t)?;
            Ok(g.sum(p))
        },
        &x,
        1e-6,
    )?;
    println!("softmax * tanh: max relative error {err:.2e}");

    let config = ModelConfig { d: 8, ..ModelConfig::default() };
    let model = SanMove::init(2, 6, config.clone(), 1)?;
    let visits = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Visit> {
        (0..n)
            .map(|i| Visit { location: rng.gen_range(1..=6), timestamp: i as i64 * 900, slot: rng.gen_range(0..48) })
            .collect()
    };
    let st = SpatioTemporal {
        slot_table: SlotSimilarityTable::constant(0.5),
        coords: std::iter::once(None)
            .chain((0..6).map(|i| Some((40.70 + 0.01 * i as f64, -74.0))))
            .collect(),
    };
    let sample = Sample::new(0, &visits(&mut rng, 5), &visits(&mut rng, 4), &st, &config);
    let mut params = Vec::new();
    model.params.visit(|_, _, t| params.push(t.clone()));
    let err = grad_check_many(
        |g, vars| {
            let p = BoundParams::from_vars(vars, 1).map_err(|_| TensorError::Empty { op: "bind" })?;
            let (loss, _) = model.loss_sum(g, &p, &sample).map_err(|_| TensorError::Empty { op: "loss" })?;
            Ok(loss)
        },
        &params,
        1e-4,
    )?;
    println!("full model loss over {} tensors: max relative error {err:.2e}", params.len());
    Ok(())
}
