//! Active learning of expert advice: exponentially weighted average and
//! greedy forecasters, their label-efficient variants that only query the
//! outcome when the experts disagree, random-query baselines, and the
//! experiment pipeline that runs them over binary classification data.
//!
//! ```
//! use active_forecast::forecasters::ForecasterState;
//! use active_forecast::primitives::UnitPrediction;
//!
//! let state = ForecasterState::with_losses(1.0, vec![0.0, 2f64.ln()]).unwrap();
//! let preds = [UnitPrediction::new(1.0).unwrap(), UnitPrediction::new(0.0).unwrap()];
//! let p = state.ewaf_predict(&preds).unwrap();
//! assert!((p.value() - 2.0 / 3.0).abs() < 1e-12);
//! ```

pub mod active;
pub mod analysis;
pub mod bench;
pub mod dataio;
pub mod error;
pub mod experts;
pub mod forecasters;
pub mod primitives;

pub use error::{Error, Result};
