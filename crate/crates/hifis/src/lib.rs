//! Forecasting chronic shelter use six months ahead from service records.
//!
//! Raw client records become labeled examples on a shared 30-day grid
//! ([`dataset`]), which train an LSTM + MLP classifier from `hifis-core`
//! under a rolling-origin evaluation ([`eval`]). Predictions are explained
//! locally with LIME and summarized with a submodular pick ([`explain`]).

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod records;
pub mod schema;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
