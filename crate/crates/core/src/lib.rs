//! Age-of-Information analysis for multi-hop relay networks with cross
//! traffic and erasure links.
//!
//! - [`model`]: tagged-source path description and steady-state rates.
//! - [`phasetype`]: hypoexponential distribution kernel.
//! - [`analysis`]: closed-form mean delay, average-AoI bounds and
//!   approximation, peak-AoI tail bound.
//! - [`desim`]: seedable discrete-event simulator of the relay network.
//! - [`stats`]: AoI, peak-AoI, fairness and confidence-interval estimators.
//! - [`scenario`] and [`cli`]: scenario files, sweeps and CSV output.

pub mod error;
pub mod model;
pub mod phasetype;
pub mod analysis;
pub mod desim;
pub mod stats;
pub mod scenario;
pub mod cli;

pub use error::{Error, Result};
