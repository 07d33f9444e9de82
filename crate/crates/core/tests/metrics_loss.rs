//! Metric and loss behavior on constructed signals, checked against
//! independent oracles (direct formula evaluation, naive DFT).

use devox_core::loss::{combined_loss, spectral_l1, time_l1, LossConfig};
use devox_core::metrics::{framewise, si_sdr, ssa_si_sdr, FrameGrid, MetricSeries};
use devox_core::{si_sdr_mono_channels, AudioClip};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn noise(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n)
        .map(|_| ((rng.next_u32() >> 8) as f32 / (1 << 24) as f32 * 2.0 - 1.0) * scale)
        .collect()
}

/// SI-SDR evaluated straight from its definition, no shortcuts shared with
/// the implementation path.
fn si_sdr_oracle(estimate: &[f32], reference: &[f32]) -> f64 {
    let dot: f64 = estimate
        .iter()
        .zip(reference)
        .map(|(&e, &r)| e as f64 * r as f64)
        .sum();
    let ref_sq: f64 = reference.iter().map(|&r| (r as f64) * (r as f64)).sum();
    let alpha = dot / ref_sq;
    let target: Vec<f64> = reference.iter().map(|&r| alpha * r as f64).collect();
    let signal: f64 = target.iter().map(|t| t * t).sum();
    let error: f64 = estimate
        .iter()
        .zip(&target)
        .map(|(&e, t)| (e as f64 - t) * (e as f64 - t))
        .sum();
    10.0 * (signal / error).log10()
}

#[test]
fn si_sdr_tracks_direct_formula() {
    let mut r = rng(11);
    for case in 0..200 {
        let n = 16 + (r.next_u32() as usize % 512);
        let reference = noise(&mut r, n, 0.8);
        let mut estimate = reference.clone();
        for (e, d) in estimate.iter_mut().zip(noise(&mut r, n, 0.2)) {
            *e += d;
        }
        let got = si_sdr(&estimate, &reference).unwrap();
        let want = si_sdr_oracle(&estimate, &reference);
        assert!((got - want).abs() <= 1e-9, "case {case}: {got} vs {want}");
    }
}

#[test]
fn stationary_degradation_gives_stable_frames() {
    // estimate = reference + fixed-gain stationary noise: every frame value
    // sits within 1 dB of the full-signal value.
    let mut r = rng(22);
    let n = 10 * 44_100;
    let reference = noise(&mut r, n, 0.5);
    let mut estimate = reference.clone();
    for (e, d) in estimate.iter_mut().zip(noise(&mut r, n, 0.05)) {
        *e += d;
    }
    let full = si_sdr(&estimate, &reference).unwrap();
    let grid = FrameGrid::from_seconds(1.5, 0.75, 44_100).unwrap();
    let series = framewise(si_sdr, &estimate, &reference, grid).unwrap();
    assert_eq!(series.len(), 12);
    for (i, score) in series.iter().enumerate() {
        let v = score.db().expect("no silent frames in this construction");
        assert!((v - full).abs() < 1.0, "frame {i}: {v} vs full {full}");
    }
}

#[test]
fn ssa_matches_per_channel_gap_on_stationary_asymmetry() {
    // Same reference and same noise signal on both channels, scaled by
    // different gains: SSA must equal the full-signal |left - right| SI-SDR
    // difference within 0.2 dB.
    let mut r = rng(33);
    let n = 10 * 44_100;
    let base = noise(&mut r, n, 0.5);
    let shared_noise = noise(&mut r, n, 1.0);
    let (g_left, g_right) = (0.02f32, 0.08f32);
    let est_left: Vec<f32> = base
        .iter()
        .zip(&shared_noise)
        .map(|(&b, &d)| b + d * g_left)
        .collect();
    let est_right: Vec<f32> = base
        .iter()
        .zip(&shared_noise)
        .map(|(&b, &d)| b + d * g_right)
        .collect();
    let reference = AudioClip::stereo(base.clone(), base, 44_100).unwrap();
    let estimate = AudioClip::stereo(est_left, est_right, 44_100).unwrap();

    let (l, r_db) = si_sdr_mono_channels(&estimate, &reference).unwrap();
    let gap = (l - r_db).abs();
    let grid = FrameGrid::from_seconds(1.5, 0.75, 44_100).unwrap();
    let ssa = ssa_si_sdr(&estimate, &reference, grid).unwrap();
    assert!(
        (ssa - gap).abs() < 0.2,
        "SSA {ssa} dB vs full-signal gap {gap} dB"
    );
}

#[test]
fn independent_channel_degradation_raises_ssa() {
    // Identical degradation on both channels vs channel-independent noise
    // gains: the independent case must come out strictly more asymmetric,
    // across seeds.
    let n = 6 * 44_100;
    let grid = FrameGrid::from_seconds(1.5, 0.75, 44_100).unwrap();
    for seed in 0..20 {
        let mut r = rng(1000 + seed);
        let left = noise(&mut r, n, 0.5);
        let right = noise(&mut r, n, 0.5);
        let shared = noise(&mut r, n, 1.0);
        let independent = noise(&mut r, n, 1.0);

        let joint_est = AudioClip::stereo(
            left.iter().zip(&shared).map(|(&x, &d)| x + 0.1 * d).collect(),
            right.iter().zip(&shared).map(|(&x, &d)| x + 0.1 * d).collect(),
            44_100,
        )
        .unwrap();
        let indep_est = AudioClip::stereo(
            left.iter().zip(&shared).map(|(&x, &d)| x + 0.02 * d).collect(),
            right.iter().zip(&independent).map(|(&x, &d)| x + 0.3 * d).collect(),
            44_100,
        )
        .unwrap();
        let reference = AudioClip::stereo(left, right, 44_100).unwrap();

        let ssa_joint = ssa_si_sdr(&joint_est, &reference, grid).unwrap();
        let ssa_indep = ssa_si_sdr(&indep_est, &reference, grid).unwrap();
        assert!(
            ssa_indep > ssa_joint,
            "seed {seed}: independent {ssa_indep} <= joint {ssa_joint}"
        );
    }
}

#[test]
fn metric_series_bookkeeping_is_consistent() {
    let mut r = rng(44);
    let n = 4 * 8_000;
    let base = noise(&mut r, n, 0.4);
    let est: Vec<f32> = base.iter().map(|&v| v * 0.9 + 0.01).collect();
    let reference = AudioClip::stereo(base.clone(), base, 8_000).unwrap();
    let estimate = AudioClip::stereo(est.clone(), est, 8_000).unwrap();
    let grid = FrameGrid::from_seconds(0.5, 0.25, 8_000).unwrap();
    let series = MetricSeries::compute(si_sdr, &estimate, &reference, grid).unwrap();
    assert_eq!(series.frame_count(), grid.frame_count(n).unwrap());
    assert_eq!(series.valid_frames() + series.skipped_frames(), series.frame_count());
    for (delta, (l, r)) in series.delta.iter().zip(series.left.iter().zip(&series.right)) {
        if let Some(d) = delta {
            assert_eq!(*d, (l.db().unwrap() - r.db().unwrap()).abs());
        }
    }
}

// ---- loss ----

/// Naive DFT magnitude oracle, O(n^2), windowed with a periodic Hann.
fn spectral_oracle(a: &AudioClip, b: &AudioClip, windows: &[usize]) -> f64 {
    let mut per_resolution = Vec::new();
    for &window in windows {
        let hop = window / 2;
        let n_fft = window.next_power_of_two();
        let bins = n_fft / 2 + 1;
        let frames = (a.frames() - window) / hop + 1;
        let hann: Vec<f64> = (0..window)
            .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / window as f64).cos()))
            .collect();
        let mut acc = 0.0;
        for c in 0..a.channels() {
            for f in 0..frames {
                let start = f * hop;
                for k in 0..bins {
                    let (mut re_a, mut im_a, mut re_b, mut im_b) = (0.0f64, 0.0, 0.0, 0.0);
                    for t in 0..window {
                        let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n_fft as f64;
                        let (s, cth) = (ang.sin(), ang.cos());
                        let xa = a.channel(c)[start + t] as f64 * hann[t];
                        let xb = b.channel(c)[start + t] as f64 * hann[t];
                        re_a += xa * cth;
                        im_a += xa * s;
                        re_b += xb * cth;
                        im_b += xb * s;
                    }
                    acc += ((re_a * re_a + im_a * im_a).sqrt()
                        - (re_b * re_b + im_b * im_b).sqrt())
                    .abs();
                }
            }
        }
        per_resolution.push(acc / (a.channels() * frames * bins) as f64);
    }
    per_resolution.iter().sum::<f64>() / per_resolution.len() as f64
}

#[test]
fn spectral_l1_matches_dft_oracle() {
    // Short windows at a low rate keep the O(n^2) oracle tractable.
    let rate = 4_000;
    let cfg = LossConfig::default();
    let mut r = rng(55);
    let n = (0.15 * rate as f64) as usize;
    let a = AudioClip::stereo(noise(&mut r, n, 0.5), noise(&mut r, n, 0.5), rate).unwrap();
    let b = AudioClip::stereo(noise(&mut r, n, 0.5), noise(&mut r, n, 0.5), rate).unwrap();
    let got = spectral_l1(&a, &b, &cfg).unwrap();
    let want = spectral_oracle(&a, &b, &cfg.window_samples(rate));
    let rel = (got - want).abs() / want.abs();
    assert!(rel <= 1e-5, "relative error {rel}");
}

#[test]
fn sine_against_silence_matches_dft_oracle() {
    let rate = 4_000;
    let cfg = LossConfig::default();
    let n = (0.2 * rate as f64) as usize;
    let sine: Vec<f32> = (0..n)
        .map(|i| (0.7 * (2.0 * std::f64::consts::PI * 441.0 * i as f64 / rate as f64).sin()) as f32)
        .collect();
    let a = AudioClip::mono(sine, rate).unwrap();
    let silence = AudioClip::silence(1, n, rate).unwrap();
    let got = spectral_l1(&a, &silence, &cfg).unwrap();
    let want = spectral_oracle(&a, &silence, &cfg.window_samples(rate));
    assert!(got > 0.0);
    let rel = (got - want).abs() / want.abs();
    assert!(rel <= 1e-5, "relative error {rel}");
}

#[test]
fn time_l1_matches_element_loop() {
    let mut r = rng(66);
    let n = 5_000;
    let a_data = noise(&mut r, n, 1.0);
    let b_data = noise(&mut r, n, 1.0);
    let mut acc = 0.0f64;
    for (x, y) in a_data.iter().zip(&b_data) {
        acc += (*x as f64 - *y as f64).abs();
    }
    let a = AudioClip::mono(a_data, 8_000).unwrap();
    let b = AudioClip::mono(b_data, 8_000).unwrap();
    assert_eq!(time_l1(&a, &b).unwrap(), acc / n as f64);
}

#[test]
fn combined_loss_decomposes_exactly() {
    let mut r = rng(77);
    let rate = 44_100;
    let n = 44_100 / 2;
    let a = AudioClip::stereo(noise(&mut r, n, 0.6), noise(&mut r, n, 0.6), rate).unwrap();
    let b = AudioClip::stereo(noise(&mut r, n, 0.6), noise(&mut r, n, 0.6), rate).unwrap();
    let cfg = LossConfig::default();
    let combined = combined_loss(&a, &b, &cfg).unwrap();
    let t = time_l1(&a, &b).unwrap();
    let s = spectral_l1(&a, &b, &cfg).unwrap();
    assert_eq!(combined, 0.875 * t + 0.125 * s);
}

#[test]
fn loss_scales_linearly_with_both_inputs() {
    let mut r = rng(88);
    let rate = 44_100;
    let n = 44_100 / 4;
    let a_data = noise(&mut r, n, 0.5);
    let b_data = noise(&mut r, n, 0.5);
    let cfg = LossConfig::default();
    let a = AudioClip::mono(a_data.clone(), rate).unwrap();
    let b = AudioClip::mono(b_data.clone(), rate).unwrap();
    let beta = 0.37f32;
    let a_s = AudioClip::mono(a_data.iter().map(|v| v * beta).collect(), rate).unwrap();
    let b_s = AudioClip::mono(b_data.iter().map(|v| v * beta).collect(), rate).unwrap();
    let base = combined_loss(&a, &b, &cfg).unwrap();
    let scaled = combined_loss(&a_s, &b_s, &cfg).unwrap();
    let rel = (scaled - beta as f64 * base).abs() / (beta as f64 * base);
    assert!(rel <= 1e-6, "relative error {rel}");
}
