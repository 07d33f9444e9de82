//! Sampled audio containers and linear mixing.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A multi-channel sampled waveform.
///
/// Samples are 32-bit floats with a nominal range of `[-1, 1]`; every channel
/// holds the same number of frames. Only mono and stereo clips are supported.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f32>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f32>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Shape(String::from("sample rate must be positive")));
        }
        if channels.is_empty() || channels.len() > 2 {
            return Err(Error::Shape(format!(
                "expected 1 or 2 channels, got {}",
                channels.len()
            )));
        }
        let frames = channels[0].len();
        if channels.iter().any(|c| c.len() != frames) {
            return Err(Error::Shape(String::from(
                "all channels must have the same frame count",
            )));
        }
        Ok(Self { channels, sample_rate })
    }

    /// An all-zero clip.
    pub fn silence(num_channels: usize, frames: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![vec![0.0; frames]; num_channels], sample_rate)
    }

    /// A stereo clip from two equally long channels.
    pub fn stereo(left: Vec<f32>, right: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn channels(&self) -> usize {
        self.channels.len()
    }

    pub fn frames(&self) -> usize {
        self.channels[0].len()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    pub fn is_stereo(&self) -> bool {
        self.channels() == 2
    }

    pub fn channel(&self, index: usize) -> &[f32] {
        &self.channels[index]
    }

    pub fn channel_mut(&mut self, index: usize) -> &mut [f32] {
        &mut self.channels[index]
    }

    /// Consumes the clip, returning the per-channel sample buffers.
    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }
}

/// Element-wise sum of the given clips. No normalization is applied.
///
/// All clips must share sample rate, channel count and length.
pub fn mix_linear(clips: &[&AudioClip]) -> Result<AudioClip> {
    let first = clips.first().ok_or(Error::EmptyInput)?;
    for clip in &clips[1..] {
        if clip.sample_rate() != first.sample_rate() {
            return Err(Error::Rate {
                expected: first.sample_rate(),
                got: clip.sample_rate(),
            });
        }
        if clip.channels() != first.channels() || clip.frames() != first.frames() {
            return Err(Error::Shape(format!(
                "cannot mix {}x{} with {}x{}",
                clip.channels(),
                clip.frames(),
                first.channels(),
                first.frames()
            )));
        }
    }
    let mut out = first.channels.clone();
    for clip in &clips[1..] {
        for (dst, src) in out.iter_mut().zip(&clip.channels) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }
    AudioClip::new(out, first.sample_rate())
}

/// A named map of stems (vocals, bass, drums, ...) that are guaranteed to be
/// mutually length- and rate-consistent.
#[derive(Debug, Clone, Default)]
pub struct StemSet {
    stems: BTreeMap<String, AudioClip>,
}

impl StemSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a stem, rejecting clips inconsistent with the existing members.
    pub fn insert(&mut self, name: impl Into<String>, clip: AudioClip) -> Result<()> {
        if let Some((_, existing)) = self.stems.iter().next() {
            if existing.sample_rate() != clip.sample_rate() {
                return Err(Error::Rate {
                    expected: existing.sample_rate(),
                    got: clip.sample_rate(),
                });
            }
            if existing.channels() != clip.channels() || existing.frames() != clip.frames() {
                return Err(Error::Shape(String::from(
                    "stem shape differs from the rest of the set",
                )));
            }
        }
        self.stems.insert(name.into(), clip);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&AudioClip> {
        self.stems.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.stems.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    /// Linear sum of the named stems, in the given order.
    pub fn mix(&self, names: &[&str]) -> Result<AudioClip> {
        let mut clips = Vec::with_capacity(names.len());
        for name in names {
            let clip = self
                .stems
                .get(*name)
                .ok_or_else(|| Error::Shape(format!("stem `{name}` not in set")))?;
            clips.push(clip);
        }
        mix_linear(&clips)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_channels() {
        let err = AudioClip::new(vec![vec![0.0; 3], vec![0.0; 4]], 44_100).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn rejects_three_plus_channels() {
        let err = AudioClip::new(vec![vec![0.0]; 3], 44_100).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn zero_length_clip_is_valid() {
        let clip = AudioClip::silence(2, 0, 44_100).unwrap();
        assert_eq!(clip.frames(), 0);
    }

    #[test]
    fn mix_with_zero_is_identity() {
        let y = AudioClip::stereo(vec![0.1, -0.2, 0.3], vec![0.0, 0.5, -0.5], 44_100).unwrap();
        let v = AudioClip::silence(2, 3, 44_100).unwrap();
        let mixed = mix_linear(&[&y, &v]).unwrap();
        assert_eq!(mixed, y);
    }

    #[test]
    fn mix_opposite_halves_cancels() {
        let a = AudioClip::mono(vec![0.5], 8_000).unwrap();
        let b = AudioClip::mono(vec![-0.5], 8_000).unwrap();
        let mixed = mix_linear(&[&a, &b]).unwrap();
        assert_eq!(mixed.channel(0), &[0.0]);
    }

    #[test]
    fn mix_rejects_shape_mismatch() {
        let a = AudioClip::mono(vec![0.5; 4], 8_000).unwrap();
        let b = AudioClip::mono(vec![0.5; 5], 8_000).unwrap();
        assert!(matches!(mix_linear(&[&a, &b]), Err(Error::Shape(_))));
    }

    #[test]
    fn mix_rejects_rate_mismatch() {
        let a = AudioClip::mono(vec![0.5; 4], 8_000).unwrap();
        let b = AudioClip::mono(vec![0.5; 4], 16_000).unwrap();
        assert!(matches!(mix_linear(&[&a, &b]), Err(Error::Rate { .. })));
    }

    #[test]
    fn stem_set_rejects_inconsistent_member() {
        let mut set = StemSet::new();
        set.insert("bass", AudioClip::silence(2, 10, 44_100).unwrap()).unwrap();
        let err = set
            .insert("drums", AudioClip::silence(2, 11, 44_100).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }
}
