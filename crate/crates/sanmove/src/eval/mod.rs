//! Ranking metrics, baselines and the training-time benchmark.

pub mod bench;
pub mod lstm;
pub mod markov;
pub mod metrics;

pub use lstm::LstmBaseline;
pub use markov::MarkovModel;
pub use metrics::{evaluate, evaluate_with_dumps, Metrics, Scorer, DEFAULT_KS};
