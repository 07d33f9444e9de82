//! Separation quality metrics: SI-SDR, frame-wise series, and the stereo
//! separation asymmetry (SSA) metric.
//!
//! SSA is the average over analysis frames of the absolute difference
//! between the left- and right-channel values of a frame-wise dB metric.
//! Large values flag attenuation that is inconsistent across the stereo
//! image. The frame metric is pluggable — any `fn(estimate, reference) ->
//! dB` works — with SI-SDR as the shipped default.

use alloc::vec::Vec;

use crate::clip::AudioClip;
use crate::error::{Error, Result};
use crate::math;

/// Reference frames whose mean power falls below this floor (~ -100 dBFS)
/// are skipped: SI-SDR is undefined on silence.
pub const SILENCE_FLOOR_POWER: f64 = 1e-10;

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// The reference is rescaled by `a = <est, ref> / ||ref||^2` and the result
/// is `10 log10(||a ref||^2 / ||est - a ref||^2)`. A perfect (rescaled)
/// estimate returns `+inf`; an estimate orthogonal to the reference returns
/// `-inf`; an all-zero reference is an error.
pub fn si_sdr(estimate: &[f32], reference: &[f32]) -> Result<f64> {
    if estimate.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput);
    }
    if estimate.len() != reference.len() {
        return Err(Error::Shape(alloc::format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    let mut dot = 0.0f64;
    let mut ref_energy = 0.0f64;
    for (&e, &r) in estimate.iter().zip(reference) {
        dot += e as f64 * r as f64;
        ref_energy += r as f64 * r as f64;
    }
    if ref_energy == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let alpha = dot / ref_energy;
    let signal_power = alpha * alpha * ref_energy;
    if signal_power == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut error_power = 0.0f64;
    for (&e, &r) in estimate.iter().zip(reference) {
        let d = e as f64 - alpha * r as f64;
        error_power += d * d;
    }
    if error_power == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * math::log10(signal_power / error_power))
}

/// Frame layout for frame-wise metrics: windows `[n*hop, n*hop + window)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    window: usize,
    hop: usize,
}

impl FrameGrid {
    pub fn new(window: usize, hop: usize) -> Result<Self> {
        if window == 0 || hop == 0 {
            return Err(Error::Shape(alloc::string::String::from(
                "window and hop must be positive",
            )));
        }
        Ok(Self { window, hop })
    }

    /// Grid from durations in seconds at the given rate.
    pub fn from_seconds(window_s: f64, hop_s: f64, sample_rate: u32) -> Result<Self> {
        let window = math::round(window_s * sample_rate as f64) as usize;
        let hop = math::round(hop_s * sample_rate as f64) as usize;
        Self::new(window, hop)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    /// `floor((len - window)/hop) + 1`; trailing partial frames are dropped.
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len < self.window {
            return Err(Error::TooShort { len, min: self.window });
        }
        Ok((len - self.window) / self.hop + 1)
    }

    pub fn frame_range(&self, n: usize) -> core::ops::Range<usize> {
        n * self.hop..n * self.hop + self.window
    }
}

/// Outcome of a frame-wise metric on one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrameScore {
    /// Metric value in dB; may be `+inf`/`-inf`.
    Db(f64),
    /// Reference frame below the silence floor; excluded from averages.
    SkippedSilent,
}

impl FrameScore {
    pub fn db(&self) -> Option<f64> {
        match self {
            FrameScore::Db(v) => Some(*v),
            FrameScore::SkippedSilent => None,
        }
    }
}

/// Applies `metric` independently to each frame of the grid.
///
/// Frames whose reference slice has mean power below
/// [`SILENCE_FLOOR_POWER`] are marked skipped instead of being evaluated.
pub fn framewise<M>(
    metric: M,
    estimate: &[f32],
    reference: &[f32],
    grid: FrameGrid,
) -> Result<Vec<FrameScore>>
where
    M: Fn(&[f32], &[f32]) -> Result<f64>,
{
    if estimate.len() != reference.len() {
        return Err(Error::Shape(alloc::format!(
            "estimate has {} samples, reference {}",
            estimate.len(),
            reference.len()
        )));
    }
    let frames = grid.frame_count(reference.len())?;
    let mut out = Vec::with_capacity(frames);
    for n in 0..frames {
        let range = grid.frame_range(n);
        let ref_frame = &reference[range.clone()];
        let mean_power = ref_frame
            .iter()
            .map(|&v| v as f64 * v as f64)
            .sum::<f64>()
            / ref_frame.len() as f64;
        if mean_power < SILENCE_FLOOR_POWER {
            out.push(FrameScore::SkippedSilent);
            continue;
        }
        out.push(FrameScore::Db(metric(&estimate[range], ref_frame)?));
    }
    Ok(out)
}

/// Frame-wise per-channel dB values with their absolute left/right gap.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub left: Vec<FrameScore>,
    pub right: Vec<FrameScore>,
    /// `|left - right|` where both channels produced a finite value.
    pub delta: Vec<Option<f64>>,
    pub grid: FrameGrid,
}

impl MetricSeries {
    /// Evaluates `metric` frame-wise on both channels of a stereo pair.
    pub fn compute<M>(
        metric: M,
        estimate: &AudioClip,
        reference: &AudioClip,
        grid: FrameGrid,
    ) -> Result<Self>
    where
        M: Fn(&[f32], &[f32]) -> Result<f64>,
    {
        check_stereo_pair(estimate, reference)?;
        let left = framewise(&metric, estimate.channel(0), reference.channel(0), grid)?;
        let right = framewise(&metric, estimate.channel(1), reference.channel(1), grid)?;
        let delta = left
            .iter()
            .zip(&right)
            .map(|(l, r)| match (l.db(), r.db()) {
                (Some(l), Some(r)) if l.is_finite() && r.is_finite() => Some((l - r).abs()),
                _ => None,
            })
            .collect();
        Ok(Self { left, right, delta, grid })
    }

    pub fn frame_count(&self) -> usize {
        self.delta.len()
    }

    /// Frames contributing to the SSA average.
    pub fn valid_frames(&self) -> usize {
        self.delta.iter().flatten().count()
    }

    /// Frames excluded because of silence or non-finite channel values.
    pub fn skipped_frames(&self) -> usize {
        self.frame_count() - self.valid_frames()
    }

    /// Mean of `|left - right|` over valid frames.
    pub fn ssa(&self) -> Result<f64> {
        let valid = self.valid_frames();
        if valid == 0 {
            return Err(Error::NoValidFrames);
        }
        Ok(self.delta.iter().flatten().sum::<f64>() / valid as f64)
    }
}

/// Stereo separation asymmetry: the time average of the absolute left/right
/// difference of the frame-wise metric. Zero means both channels degrade
/// identically; larger values mean channel-asymmetric attenuation.
pub fn ssa<M>(
    estimate: &AudioClip,
    reference: &AudioClip,
    grid: FrameGrid,
    metric: M,
) -> Result<f64>
where
    M: Fn(&[f32], &[f32]) -> Result<f64>,
{
    MetricSeries::compute(metric, estimate, reference, grid)?.ssa()
}

/// SSA with SI-SDR as the frame metric.
pub fn ssa_si_sdr(estimate: &AudioClip, reference: &AudioClip, grid: FrameGrid) -> Result<f64> {
    ssa(estimate, reference, grid, si_sdr)
}

/// Full-signal SI-SDR per channel, `(left, right)`.
pub fn si_sdr_mono_channels(estimate: &AudioClip, reference: &AudioClip) -> Result<(f64, f64)> {
    check_stereo_pair(estimate, reference)?;
    let left = si_sdr(estimate.channel(0), reference.channel(0))?;
    let right = si_sdr(estimate.channel(1), reference.channel(1))?;
    Ok((left, right))
}

fn check_stereo_pair(estimate: &AudioClip, reference: &AudioClip) -> Result<()> {
    if !estimate.is_stereo() || !reference.is_stereo() {
        return Err(Error::Shape(alloc::string::String::from(
            "stereo clips required",
        )));
    }
    if estimate.frames() != reference.frames() {
        return Err(Error::Shape(alloc::format!(
            "estimate has {} frames, reference {}",
            estimate.frames(),
            reference.frames()
        )));
    }
    if estimate.sample_rate() != reference.sample_rate() {
        return Err(Error::Rate {
            expected: reference.sample_rate(),
            got: estimate.sample_rate(),
        });
    }
    Ok(())
}
