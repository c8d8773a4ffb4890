//! Onion quantum reservoir computing.
//!
//! Multi-layer quantum reservoirs whose channel eigenvalue spectra are tuned
//! by rotation prefactors and mid-circuit measurements, classical onion echo
//! state networks, a hybrid of both, and the corrosion forecasting protocol
//! used to compare them (a few observed days, then closed-loop prediction
//! driven only by humidity and temperature).

pub mod linalg;
pub mod quantum;
pub mod spectrum;
pub mod reservoir;
pub mod qreservoir;
pub mod creservoir;
pub mod readout;
pub mod data;
pub mod harness;

pub use harness::{Error, Result};
