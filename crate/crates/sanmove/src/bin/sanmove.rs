use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use sanmove::eval::bench::{run_bench, write_bench_csv, BenchConfig};
use sanmove::stnova::StnovaMode;
use sanmove::{workflow, Error};

#[derive(Parser)]
#[command(name = "sanmove", version, about = "Next-location recommendation from check-in data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, sessionize, filter, split and encode a check-in file.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train a model on a preprocessed dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Overrides the mode in the config file.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<StnovaMode>,
    },
    /// Score test sessions with a checkpoint and the Markov baseline.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time training epochs against the LSTM baseline on synthetic sessions.
    Bench {
        #[arg(long)]
        seq_len: usize,
        #[arg(long)]
        sessions: usize,
        #[arg(long)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 32)]
        d: usize,
    },
    /// Print per-stage dataset statistics for a check-in file.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<StnovaMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Preprocess { input, output } => {
            let done = workflow::preprocess_file(&input, &output)?;
            print!("{}", done.stats.to_text());
            println!("rejected lines: {}", done.rejects.len());
        }
        Command::Train {
            data,
            config,
            checkpoint,
            mode,
        } => {
            let data = workflow::load_dataset(&data)?;
            workflow::train_dataset(&data, &config, mode, &checkpoint, |r| {
                println!(
                    "epoch {:>3}  loss {:.4}  lr {:.2e}  {:.2}s  {:.1} sessions/s",
                    r.epoch + 1,
                    r.mean_loss,
                    r.lr,
                    r.wall_time_s,
                    r.examples_per_sec
                );
            })?;
        }
        Command::Eval { data, checkpoint, out } => {
            let data = workflow::load_dataset(&data)?;
            let r = workflow::evaluate_checkpoint(&data, &checkpoint, &out)?;
            for (name, m) in [(format!("sanmove/{}", r.mode), &r.sanmove), ("markov".to_string(), &r.markov)] {
                println!(
                    "{name:<16} n={}  rec@1 {:.4}  rec@5 {:.4}  rec@10 {:.4}  ndcg@10 {:.4}",
                    m.n_examples,
                    m.recall(1),
                    m.recall(5),
                    m.recall(10),
                    m.ndcg(10)
                );
            }
        }
        Command::Bench {
            seq_len,
            sessions,
            workers,
            out,
            epochs,
            d,
        } => {
            let cfg = BenchConfig {
                seq_len,
                sessions,
                workers,
                epochs,
                d,
                ..BenchConfig::default()
            };
            let rows = run_bench(&cfg)?;
            write_bench_csv(BufWriter::new(File::create(out)?), &rows)?;
            for r in &rows {
                println!("{:<8} median {:.3}s  ratio {:.3}", r.model, r.median_s, r.ratio_vs_lstm);
            }
        }
        Command::Stats { input } => print!("{}", workflow::stats_file(&input)?.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
