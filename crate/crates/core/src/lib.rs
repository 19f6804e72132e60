//! Recursive V-BLAST MMSE-SIC detectors with flop and memory accounting.
//!
//! * [`numkernel`]: counted complex linear algebra and the inversion,
//!   rank-one update and deflation kernels.
//! * [`sigmodel`]: constellations, Rayleigh channel, AWGN.
//! * [`detectors`]: the detectors plus a brute-force reference.
//! * [`metering`]: dominant-term complexity models and ledger comparison.

pub mod detectors;
mod error;
pub mod fixtures;
pub mod metering;
pub mod numkernel;
pub mod sigmodel;

pub use error::{Error, Result};
