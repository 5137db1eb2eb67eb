//! Post-processing chain for homodyne vacuum-fluctuation random number
//! generators.
//!
//! The crate is `no_std` with `alloc`. It covers:
//!
//! * [`entropy`]: the effective iid model of a stationary Gaussian source and
//!   the min-entropy lower bound against quantum side information, its
//!   worst case over confidence intervals, and leftover-hash output sizing.
//! * [`spectral`]: Welch PSD estimation with tail-bound confidence intervals
//!   for total variance, entropy rate and conditional variance.
//! * [`simulator`]: synthetic colored Gaussian signals with analytic ground
//!   truth, ADC quantization and two-laser beat records.
//! * [`calibration`]: transfer-function extraction and the conservative
//!   vacuum PSD lower bound.
//! * [`extractor`]: Toeplitz hashing, both as a naive reference and as a
//!   128-bit column-sliced implementation.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod calibration;
pub mod entropy;
pub mod extractor;
pub mod fft;
pub mod rng;
pub mod simulator;
pub mod spectral;

mod normal;
mod reduce;

pub use reduce::{Joiner, Sequential};
