use thiserror::Error;

use crate::autodiff::TensorError;
use crate::checkpoint::CheckpointError;
use crate::data::DataError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("history is empty; the long-term module needs at least one record")]
    EmptyHistory,
    #[error("sequence is empty")]
    EmptySequence,
    #[error("attention row {0} has no unmasked key")]
    FullyMaskedRow(usize),
    #[error("no supervised position has a real target")]
    NoTargets,
    #[error("dataset has no examples")]
    EmptyDataset,
    #[error("input index {index} out of range for {what} (size {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
