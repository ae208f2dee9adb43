//! File formats, dataset IO, synthetic graphs and run bookkeeping around
//! [`sagn_core`].

pub mod attention;
pub mod binfmt;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod graphio;
pub mod hops;
pub mod pipeline;
pub mod runlog;
pub mod synth;

pub use error::{Result, SagnError};
