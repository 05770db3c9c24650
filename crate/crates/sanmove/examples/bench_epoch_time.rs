//! Times training epochs of the attention model and the LSTM on the same
//! synthetic workload.
//!
//! `cargo run --release --example bench_epoch_time -- [seq_len] [sessions] [workers]`

use sanmove::eval::bench::{run_bench, write_bench_csv, BenchConfig};

fn main() -> sanmove::Result<()> {
    let arg = |i: usize, default: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let cfg = BenchConfig {
        seq_len: arg(1, 64),
        sessions: arg(2, 200),
        workers: arg(3, 4),
        epochs: 3,
        ..BenchConfig::default()
    };
    println!("{} hardware threads available", std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = run_bench(&cfg)?;
    write_bench_csv(std::io::stdout().lock(), &rows)
}
