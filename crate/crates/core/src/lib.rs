//! Core engine for stereo singing-voice cancellation.
//!
//! This crate holds everything that does not touch the filesystem: audio
//! containers and mixing, the convolutional primitives, the masking
//! separation model with its streaming execution state, and the evaluation
//! metrics (SI-SDR, frame-wise series, stereo separation asymmetry) plus the
//! combined time/spectral loss used to compare outputs.
//!
//! The crate is `no_std` (it requires `alloc`) so the inference path can run
//! on small devices; all float transcendentals go through [`libm`] for
//! platform-independent results. File I/O, the WAV codec, the dataset
//! harness and the CLI live in the companion `devox` crate.
//!
//! Quick tour:
//!
//! * [`clip`] — [`AudioClip`](clip::AudioClip), stem sets, linear mixing.
//! * [`tensor`] — dense tensors, dilated/depthwise/2-D convolutions,
//!   activations and cumulative layer norm.
//! * [`config`] / [`weights`] / [`model`] — model hyperparameters, the
//!   weight container, the offline forward pass and the
//!   receptive-field/look-ahead/parameter budget.
//! * [`stream`] — block-by-block execution with a hard latency contract.
//! * [`metrics`] — SI-SDR and the stereo separation asymmetry metric.
//! * [`loss`] — weighted time-domain L1 + multi-resolution spectral L1.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod clip;
pub mod config;
mod error;
mod fft;
pub mod loss;
mod math;
pub mod metrics;
pub mod model;
pub mod stream;
pub mod tensor;
pub mod weights;

pub use clip::{mix_linear, AudioClip, StemSet};
pub use config::{EncoderConfig, MaskActivation, ModelConfig, SeparatorConfig};
pub use error::{Error, Result};
pub use metrics::{si_sdr, si_sdr_mono_channels, ssa, FrameGrid, MetricSeries};
pub use model::{budget, build_model, random_init, BudgetReport, Model};
pub use stream::{StreamFootprint, StreamState};
pub use tensor::{ConvSpec, PaddingMode, Tensor};
pub use weights::WeightStore;
