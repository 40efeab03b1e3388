//! Identification of the number of taps of a multipath channel from a
//! transmitted/received signal pair.
//!
//! Three estimators share one synthetic channel pipeline:
//!
//! * [`neural`]: a feed-forward classifier with batch norm, hard-shrinkage
//!   activations and dropout, trained from scratch with Adam;
//! * [`sparse`]: iterative hard thresholding over a convolution dictionary;
//! * [`swiss`]: weighted-DFT reconstruction from OFDM pilots with a
//!   Newton-solved norm constraint and cumulative-energy path counting.
//!
//! [`dataset`] builds labeled corpora, [`harness`] drives the
//! generate/train/evaluate/compare workflow used by the `tapscount` CLI.

mod bytes;
pub mod channel;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod neural;
pub mod plot;
pub mod seed;
pub mod signal;
pub mod sparse;
pub mod swiss;

pub use error::{Error, ErrorCategory, Result};
