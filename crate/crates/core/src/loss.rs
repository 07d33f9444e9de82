//! The training objective as a measurement function: weighted time-domain
//! L1 plus multi-resolution spectral L1.
//!
//! Both terms are arithmetic means over elements (not sums), so values are
//! comparable across signal durations and the 0.875/0.125 weighting keeps
//! its meaning. The spectral term compares linear-magnitude short-time
//! spectra under a periodic Hann window, FFT size the next power of two
//! above each window length.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::clip::AudioClip;
use crate::error::{Error, Result};
use crate::fft;
use crate::math;

/// Weights and analysis windows of the combined loss.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossConfig {
    pub time_weight: f64,
    pub spec_weight: f64,
    /// Analysis window lengths in seconds, ascending. Hop is half a window.
    pub window_lengths_s: Vec<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            time_weight: 0.875,
            spec_weight: 0.125,
            window_lengths_s: vec![0.01, 0.02, 0.09],
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_weight < 0.0 || self.spec_weight < 0.0 {
            return Err(Error::Config(String::from("weights must be non-negative")));
        }
        if ((self.time_weight + self.spec_weight) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(String::from("weights must sum to 1")));
        }
        if self.window_lengths_s.is_empty() {
            return Err(Error::Config(String::from("need at least one window")));
        }
        if self.window_lengths_s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(String::from("windows must be ascending")));
        }
        if self.window_lengths_s.iter().any(|&w| w <= 0.0) {
            return Err(Error::Config(String::from("windows must be positive")));
        }
        Ok(())
    }

    /// Window lengths in samples at the given rate.
    pub fn window_samples(&self, sample_rate: u32) -> Vec<usize> {
        self.window_lengths_s
            .iter()
            .map(|&w| (math::round(w * sample_rate as f64) as usize).max(1))
            .collect()
    }
}

fn check_pair(a: &AudioClip, b: &AudioClip) -> Result<()> {
    if a.channels() != b.channels() || a.frames() != b.frames() {
        return Err(Error::Shape(alloc::format!(
            "{}x{} vs {}x{}",
            a.channels(),
            a.frames(),
            b.channels(),
            b.frames()
        )));
    }
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::Rate { expected: b.sample_rate(), got: a.sample_rate() });
    }
    if a.frames() == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Mean absolute difference over all channels and samples.
pub fn time_l1(a: &AudioClip, b: &AudioClip) -> Result<f64> {
    check_pair(a, b)?;
    let mut acc = 0.0f64;
    for c in 0..a.channels() {
        for (&x, &y) in a.channel(c).iter().zip(b.channel(c)) {
            acc += (x as f64 - y as f64).abs();
        }
    }
    Ok(acc / (a.channels() * a.frames()) as f64)
}

/// Multi-resolution spectral L1: mean absolute difference of linear
/// magnitude spectrograms, averaged with equal weight across resolutions.
pub fn spectral_l1(a: &AudioClip, b: &AudioClip, config: &LossConfig) -> Result<f64> {
    check_pair(a, b)?;
    config.validate()?;
    let windows = config.window_samples(a.sample_rate());
    let largest = *windows.last().unwrap();
    if a.frames() < largest {
        return Err(Error::TooShort { len: a.frames(), min: largest });
    }

    let mut total = 0.0f64;
    for &window in &windows {
        total += resolution_l1(a, b, window)?;
    }
    Ok(total / windows.len() as f64)
}

fn resolution_l1(a: &AudioClip, b: &AudioClip, window: usize) -> Result<f64> {
    let hop = (window / 2).max(1);
    let n_fft = fft::next_pow2(window);
    let bins = n_fft / 2 + 1;
    let frames = (a.frames() - window) / hop + 1;

    let hann: Vec<f64> = (0..window)
        .map(|i| 0.5 * (1.0 - math::cos(2.0 * core::f64::consts::PI * i as f64 / window as f64)))
        .collect();

    let mut windowed = vec![0.0f64; window];
    let mut mag_a = vec![0.0f64; bins];
    let mut mag_b = vec![0.0f64; bins];
    let mut acc = 0.0f64;
    for c in 0..a.channels() {
        for n in 0..frames {
            let start = n * hop;
            for (slot, (&x, &w)) in windowed
                .iter_mut()
                .zip(a.channel(c)[start..start + window].iter().zip(&hann))
            {
                *slot = x as f64 * w;
            }
            fft::real_magnitudes(&windowed, n_fft, &mut mag_a);
            for (slot, (&x, &w)) in windowed
                .iter_mut()
                .zip(b.channel(c)[start..start + window].iter().zip(&hann))
            {
                *slot = x as f64 * w;
            }
            fft::real_magnitudes(&windowed, n_fft, &mut mag_b);
            for (&ma, &mb) in mag_a.iter().zip(&mag_b) {
                acc += (ma - mb).abs();
            }
        }
    }
    Ok(acc / (a.channels() * frames * bins) as f64)
}

/// `time_weight * time_l1 + spec_weight * spectral_l1`.
pub fn combined_loss(a: &AudioClip, b: &AudioClip, config: &LossConfig) -> Result<f64> {
    let time = time_l1(a, b)?;
    let spectral = spectral_l1(a, b, config)?;
    Ok(config.time_weight * time + config.spec_weight * spectral)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, seconds: f64, rate: u32) -> Vec<f32> {
        let n = (seconds * rate as f64) as usize;
        (0..n)
            .map(|i| (0.5 * math::sin(2.0 * core::f64::consts::PI * freq * i as f64 / rate as f64)) as f32)
            .collect()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let a = AudioClip::stereo(tone(441.0, 0.2, 44_100), tone(220.0, 0.2, 44_100), 44_100)
            .unwrap();
        let cfg = LossConfig::default();
        assert_eq!(time_l1(&a, &a).unwrap(), 0.0);
        assert_eq!(spectral_l1(&a, &a, &cfg).unwrap(), 0.0);
        assert_eq!(combined_loss(&a, &a, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_time_l1() {
        let base = tone(100.0, 0.05, 8_000);
        let shifted: Vec<f32> = base.iter().map(|v| v + 0.25).collect();
        let a = AudioClip::mono(base, 8_000).unwrap();
        let b = AudioClip::mono(shifted, 8_000).unwrap();
        assert!((time_l1(&a, &b).unwrap() - 0.25).abs() < 1e-7);
    }

    #[test]
    fn degenerate_weights_reduce_to_time_term() {
        let a = AudioClip::mono(tone(441.0, 0.2, 44_100), 44_100).unwrap();
        let b = AudioClip::mono(tone(392.0, 0.2, 44_100), 44_100).unwrap();
        let cfg = LossConfig { time_weight: 1.0, spec_weight: 0.0, ..LossConfig::default() };
        assert_eq!(combined_loss(&a, &b, &cfg).unwrap(), time_l1(&a, &b).unwrap());
    }

    #[test]
    fn circular_shift_is_detected() {
        let rate = 44_100;
        let base = tone(441.0, 0.2, rate);
        let cfg = LossConfig::default();
        let hop = cfg.window_samples(rate)[0] / 2;
        let mut shifted = base.clone();
        shifted.rotate_right(hop);
        let a = AudioClip::mono(base, rate).unwrap();
        let b = AudioClip::mono(shifted, rate).unwrap();
        assert!(spectral_l1(&a, &b, &cfg).unwrap() > 0.0);
    }

    #[test]
    fn too_short_for_largest_window() {
        let a = AudioClip::mono(tone(441.0, 0.05, 44_100), 44_100).unwrap();
        let cfg = LossConfig::default();
        // 0.05 s < 0.09 s largest window
        assert!(matches!(
            spectral_l1(&a, &a, &cfg),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn invalid_weight_sum_rejected() {
        let cfg = LossConfig { time_weight: 0.5, spec_weight: 0.2, ..LossConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = AudioClip::mono(alloc::vec![0.0; 100], 8_000).unwrap();
        let b = AudioClip::mono(alloc::vec![0.0; 101], 8_000).unwrap();
        assert!(matches!(time_l1(&a, &b), Err(Error::Shape(_))));
    }
}
