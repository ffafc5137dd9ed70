//! Word embeddings enriched with knowledge-graph annotations.

#[cfg(feature = "cli")]
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod io;
pub mod knowledge;
pub mod model;
pub mod retrofit;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
