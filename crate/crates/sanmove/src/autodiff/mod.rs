//! Dense `f64` tensors with a define-by-run reverse-mode tape.
//!
//! A [`Graph`] is built fresh for every forward pass. Trainable tensors enter
//! through [`Graph::param`], data through [`Graph::constant`]; after
//! [`Graph::backward`] the adjoint of every reachable parameter is available
//! through [`Graph::grad`].

mod check;
mod graph;
mod tensor;

pub use check::{grad_check, grad_check_many, relative_error};
pub use graph::{Graph, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("{op}: expected rank {expected}, got shape {shape:?}")]
    RankMismatch {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("data length {len} does not match shape {shape:?}")]
    BadLength { shape: Vec<usize>, len: usize },
    #[error("index {index} out of range for extent {bound}")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("{op}: axis {axis} out of range for rank {rank}")]
    InvalidAxis {
        op: &'static str,
        axis: usize,
        rank: usize,
    },
    #[error("backward needs a scalar loss, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("{op}: no inputs")]
    Empty { op: &'static str },
}
