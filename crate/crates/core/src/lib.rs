//! Numeric core for forecasting chronic shelter use.
//!
//! Everything here runs on `alloc` only: stay-day counting on integer day
//! numbers, rolling-origin fold splits, feature standardization, the
//! LSTM + dense network with its weighted-F1 objective and Adam trainer,
//! classification metrics, a class-weighted logistic-regression baseline,
//! and the LIME / submodular-pick explainers. File formats, calendars and
//! the command line live in the `hifis` crate.
//!
//! With the `std` feature, exponentials and logarithms come from the
//! platform math library instead of `libm`.
#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod activity;
pub mod adam;
pub mod error;
pub mod folds;
pub mod linalg;
pub mod logreg;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod scaler;
pub mod train;
pub mod lime;

mod math;

pub use error::{CoreError, Result};
pub use net::{InputLayout, ModelConfig, ModelParams};
pub use train::{SampleView, TrainReport};
