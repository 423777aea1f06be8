//! Split conformal prediction with credal-set uncertainty measures.

pub mod active;
pub mod cli;
pub mod config;
pub mod coverage;
pub mod epu;
pub mod error;
pub mod imprecise;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod scores;
pub mod selective;
pub mod stats;
pub mod transducer;

pub use error::{Error, Result};
