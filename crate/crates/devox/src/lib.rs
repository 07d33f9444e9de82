//! File formats, dataset harness and evaluation runners around
//! [`devox_core`].
//!
//! This crate carries everything that touches the filesystem: the WAV
//! codec, weight-container and config files, MUSDB-style dataset scanning
//! with the vocal-silence filter, and batch evaluation producing
//! mean ± std reports for SI-SDR, per-channel SI-SDR and the stereo
//! separation asymmetry metric. The `devox` binary exposes it all as
//! subcommands.

pub mod dataset;
mod error;
pub mod eval;
pub mod files;
pub mod wav;

pub use error::{Error, Result};

// Re-export the engine so binary users need a single dependency.
pub use devox_core as core;
