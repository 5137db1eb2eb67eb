//! File formats, configuration, parallel drivers and the end-to-end
//! pipeline built on `qrng-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod formats;
pub mod parallel;
pub mod pipeline;

pub use error::{KitError, Result};
