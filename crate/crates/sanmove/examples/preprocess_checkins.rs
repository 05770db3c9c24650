//! Runs raw check-in lines through cleaning, sessionization, filtering and
//! the train/test split, then prints per-stage counts.
//!
//! `cargo run --example preprocess_checkins [-- path/to/checkins.tsv]`

use sanmove::data::PipelineRules;
use sanmove::synthetic::{cycle_dataset, to_checkin_tsv};
use sanmove::workflow::preprocess_text;

fn main() -> sanmove::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => to_checkin_tsv(&cycle_dataset(5, 8, 0.1, 0)?),
    };
    let done = preprocess_text(&text, &PipelineRules::default())?;
    print!("{}", done.stats.to_text());
    let data = &done.dataset;
    println!(
        "\n{} users, {} locations, {} rejected lines",
        data.vocab.num_users(),
        data.vocab.num_locations(),
        done.rejects.len()
    );
    if let Some(u) = data.users.first() {
        let first: Vec<usize> = u.train[0].iter().map(|v| v.location).collect();
        println!("user {} first session (location indices): {first:?}", data.vocab.user_id(u.user));
    }
    Ok(())
}
