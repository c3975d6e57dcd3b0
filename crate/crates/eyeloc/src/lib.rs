//! File formats, dataset loaders, evaluation harness and command line for
//! [`eyeloc_core`].

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod formats;
pub mod imageio;
pub mod sequence;
pub mod synthio;

pub use error::{CliError, Result};
