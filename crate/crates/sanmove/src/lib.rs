pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod long_term;
pub mod model;
pub mod stnova;
pub mod synthetic;
pub mod train;
pub mod workflow;

pub use error::{Error, Result};
